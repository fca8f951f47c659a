// Copyright 2026 The STNet Toolkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stnet/image.hpp"

namespace stnet {

enum class CorruptionKind {
  kGaussianNoise,
  kShotNoise,
  kImpulseNoise,
  kSpeckleNoise,
  kRandomZero,
  kBrightness,
  kContrast,
  kSaturate,
  kGaussianBlur,
  kDefocusBlur,
  kMotionBlur,
  kZoomBlur,
  kPixelate,
  kElasticTransform,
};

inline constexpr std::size_t kNumCorruptionKinds = 14;
inline constexpr int kMaxSeverity = 5;

const std::array<CorruptionKind, kNumCorruptionKinds>& all_corruption_kinds();
std::string_view corruption_name(CorruptionKind kind);  // "gaussian-noise", ...
std::optional<CorruptionKind> parse_corruption(std::string_view text);
std::string corruption_names_list();  // comma separated, for error messages

bool is_stochastic(CorruptionKind kind);

struct SeverityParameter {
  std::string_view name;  // e.g. "sigma"
  std::array<double, kMaxSeverity> values;
  double null_value;      // parameter at which the kind is the identity
  bool stronger_when_larger;
};

const SeverityParameter& severity_parameter(CorruptionKind kind);

// kind,severity,parameter,value for every kind and severity 1..5.
std::string severity_table_csv();

struct Corruption {
  CorruptionKind kind = CorruptionKind::kGaussianNoise;
  int severity = 1;
  std::uint64_t seed = 0;
  // Replaces the table value when set (null-strength and sweep tests).
  std::optional<double> parameter;

  double strength() const;
  std::string tag() const;  // provenance, e.g. "contrast/3/seed=0"
};

// Throws std::invalid_argument for severity outside 1..5 or non-RGB input.
Image apply(const Image& image, const Corruption& corruption);

// Zeroes every channel of each pixel independently with probability p.
Image random_zero(const Image& image, double p, std::uint64_t seed);

// Per-image seed is corruption.seed ^ index; labels and ids are kept.
LabeledImageSet corrupt_set(const LabeledImageSet& images, const Corruption& corruption);

}  // namespace stnet
