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

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stnet/layer_kind.hpp"

namespace stnet {

enum class BaseFamily { kVGG16, kResNet50, kMobileNetV2, kMiniVGG, kCustom };

std::string_view family_name(BaseFamily family);
std::optional<BaseFamily> parse_family(std::string_view text);

// One layer of a declarative architecture. Only the fields relevant to
// `kind` are meaningful; the rest keep their defaults.
struct LayerTemplate {
  LayerKind kind = LayerKind::kRelu;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  Padding padding = Padding::kSame;
  std::size_t filters = 0;  // conv2d / dense output width
  bool bias = false;
  double cap = 0.0;         // relu upper bound, 0 = none
  double momentum = 0.99;   // batch_norm
  double epsilon = 1e-3;    // batch_norm

  friend bool operator==(const LayerTemplate&, const LayerTemplate&) = default;
};

// y = main(x) + shortcut(x); an empty shortcut is the identity.
struct ResidualBlock {
  std::vector<LayerTemplate> main;
  std::vector<LayerTemplate> shortcut;

  friend bool operator==(const ResidualBlock&, const ResidualBlock&) = default;
};

using ArchItem = std::variant<LayerTemplate, ResidualBlock>;

// Layer-by-layer network description. `body` is the feature extractor and
// is replicated once per stream with independent weights. When `joint` is
// set each stream output is flattened and the streams are concatenated
// before `head`.
struct ArchDescription {
  std::string name;
  BaseFamily family = BaseFamily::kCustom;
  double alpha = 1.0;
  double scale = 1.0;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 3;
  std::size_t classes = 10;
  std::size_t streams = 1;
  bool joint = false;
  std::vector<ArchItem> body;
  std::vector<ArchItem> head;

  friend bool operator==(const ArchDescription&, const ArchDescription&) = default;
};

class ArchParseError : public std::runtime_error {
 public:
  ArchParseError(std::size_t line, const std::string& what)
      : std::runtime_error("architecture text line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Canonical text form: a header block, then one layer per line. Parsing
// the output of serialize_arch reproduces the description exactly.
std::string serialize_arch(const ArchDescription& desc);
ArchDescription parse_arch(std::string_view text);

// Throws std::invalid_argument when any conv / dense width is zero or the
// stream count is zero.
void check_arch(const ArchDescription& desc);

// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

}  // namespace stnet
