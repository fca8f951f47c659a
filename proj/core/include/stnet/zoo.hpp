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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stnet/arch.hpp"
#include "stnet/graph.hpp"

namespace stnet {

struct InputSpec {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 3;
};

// Canonical VGG16: 13 biased 3x3 convs, 5 max-pools, two 4096-unit dense
// layers and the classifier.
ArchDescription vgg16_desc(InputSpec input = {}, std::size_t classes = 10);

// ResNet50 v1: 7x7/2 stem, 3x3/2 max-pool, bottleneck stages 3-4-6-3,
// batch-norm after every conv, global average pool. Convs carry biases as
// in the Keras reference model.
ArchDescription resnet50_desc(InputSpec input = {}, std::size_t classes = 10);

// MobileNetV2 with width multiplier alpha in (0, 1]. Widths are rounded to
// multiples of 8 (never below 8, never more than 10% below the target).
ArchDescription mobilenetv2_desc(double alpha = 1.0, InputSpec input = {},
                                 std::size_t classes = 10);

// Desk-scale VGG-style net: filters are consumed two per conv-conv-pool
// block (a trailing odd filter forms a one-conv block), then dense 128 and
// the classifier.
ArchDescription minivgg_desc(std::vector<std::size_t> filters = {16, 16, 32, 32},
                             InputSpec input = {}, std::size_t classes = 10);

ArchDescription base_desc(BaseFamily family, std::size_t classes = 10, InputSpec input = {});

// Channel rounding rule used by MobileNetV2.
std::size_t make_divisible(double value, std::size_t divisor = 8);

// Divides every conv and hidden dense width by factor (half-up, floor 1).
// The classifier width is unchanged. MobileNetV2 is rebuilt with
// alpha / factor instead. Throws std::invalid_argument for factor < 1.
ArchDescription downscale(const ArchDescription& desc, double factor);

struct StnetName {
  std::size_t streams = 1;
  double scale = 1.0;
  BaseFamily base = BaseFamily::kVGG16;

  friend bool operator==(const StnetName&, const StnetName&) = default;
};

class NameParseError : public std::invalid_argument {
 public:
  NameParseError(std::size_t position, const std::string& what)
      : std::invalid_argument(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// "STNet{streams}_{scale}_{base}", e.g. "STNet5_1.5_VGG16". The stream
// count may also be parenthesized ("STNet(5)_5_ResNet50").
StnetName parse_stnet_name(std::string_view text);
std::string format_stnet_name(const StnetName& name);

// Width multiplier implied by a MobileNetV2 scale factor.
inline double alpha_for_scale(double scale) { return 1.0 / scale; }

// Streams are downscale(base, scale) with the base head removed; the joint
// head is dense 400 + relu -> batch-norm -> relu -> dense classes + softmax.
ArchDescription stnet_desc(const ArchDescription& base, std::size_t streams, double scale,
                           std::size_t classes);
ArchDescription stnet_desc(const StnetName& name, std::size_t classes = 10,
                           InputSpec input = {});

// Accepts a base family name ("VGG16") or an STNet name.
ArchDescription model_desc(std::string_view model, std::size_t classes = 10,
                           InputSpec input = {});

inline constexpr std::size_t kJointHiddenUnits = 400;

// Builds a validated graph with He-uniform fan-in weights, zero biases and
// shifts, unit scales. Every draw is a function of (seed, node index).
template <typename T>
Graph<T> compile(const ArchDescription& desc, std::uint64_t seed);

template <typename T>
Graph<T> build_stnet(const ArchDescription& base, std::size_t streams, double scale,
                     std::size_t classes, std::uint64_t seed) {
  return compile<T>(stnet_desc(base, streams, scale, classes), seed);
}

// Structural decoupling check: the graph validates (no cross-stream edge)
// and no two parameters share storage. Throws GraphError otherwise.
template <typename T>
void check_stream_decoupling(const Graph<T>& graph);

}  // namespace stnet
