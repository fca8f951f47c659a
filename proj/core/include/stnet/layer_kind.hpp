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

#include <optional>
#include <string>
#include <string_view>

namespace stnet {

enum class LayerKind {
  kInput,
  kConv2d,
  kDepthwiseConv2d,
  kDense,
  kBatchNorm,
  kRelu,
  kMaxPool,
  kAvgPool,
  kGlobalAvgPool,
  kFlatten,
  kConcat,
  kResidualAdd,
  kSoftmax,
};

enum class Padding { kSame, kValid };

std::string_view layer_kind_name(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view text);

std::string_view padding_name(Padding padding);
std::optional<Padding> parse_padding(std::string_view text);

// Output extent and leading pad of a windowed op along one axis.
struct WindowGeometry {
  std::size_t out = 0;
  std::size_t pad_begin = 0;
};

// TensorFlow-style padding: "same" yields ceil(in / stride) outputs.
WindowGeometry window_geometry(std::size_t in, std::size_t kernel,
                               std::size_t stride, Padding padding);

}  // namespace stnet
