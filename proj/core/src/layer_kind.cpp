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

#include "stnet/layer_kind.hpp"

#include <array>
#include <utility>

namespace stnet {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 13> kKindNames{{
    {LayerKind::kInput, "input"},
    {LayerKind::kConv2d, "conv2d"},
    {LayerKind::kDepthwiseConv2d, "depthwise_conv2d"},
    {LayerKind::kDense, "dense"},
    {LayerKind::kBatchNorm, "batch_norm"},
    {LayerKind::kRelu, "relu"},
    {LayerKind::kMaxPool, "max_pool"},
    {LayerKind::kAvgPool, "avg_pool"},
    {LayerKind::kGlobalAvgPool, "global_avg_pool"},
    {LayerKind::kFlatten, "flatten"},
    {LayerKind::kConcat, "concat"},
    {LayerKind::kResidualAdd, "residual_add"},
    {LayerKind::kSoftmax, "softmax"},
}};

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<LayerKind> parse_layer_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::string_view padding_name(Padding padding) {
  return padding == Padding::kSame ? "same" : "valid";
}

std::optional<Padding> parse_padding(std::string_view text) {
  if (text == "same") return Padding::kSame;
  if (text == "valid") return Padding::kValid;
  return std::nullopt;
}

WindowGeometry window_geometry(std::size_t in, std::size_t kernel,
                               std::size_t stride, Padding padding) {
  WindowGeometry g;
  if (padding == Padding::kSame) {
    g.out = (in + stride - 1) / stride;
    const std::size_t needed = (g.out - 1) * stride + kernel;
    g.pad_begin = needed > in ? (needed - in) / 2 : 0;
  } else {
    g.out = in >= kernel ? (in - kernel) / stride + 1 : 0;
    g.pad_begin = 0;
  }
  return g;
}

}  // namespace stnet
