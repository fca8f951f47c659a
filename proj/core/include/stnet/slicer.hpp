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
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "stnet/image.hpp"
#include "stnet/tensor.hpp"

namespace stnet {

enum class SliceMode {
  kPixelLuminance,  // whole pixel goes to the bin of mean(R, G, B)
  kPerChannel,      // each channel value binned on its own
};

std::string_view slice_mode_name(SliceMode mode);
std::optional<SliceMode> parse_slice_mode(std::string_view text);

struct SliceSpec {
  std::size_t num_slices = 1;
  SliceMode mode = SliceMode::kPixelLuminance;
  std::vector<double> edges{0.0, 256.0};
  bool include_upper_on_last = true;
};

// Equal-width bins: edges[k] = 256 k / n.
SliceSpec make_spec(std::size_t num_slices, SliceMode mode = SliceMode::kPixelLuminance);

// Throws std::invalid_argument if edges are not 0 = e0 < ... < en = 256.
void check_spec(const SliceSpec& spec);

// Bin index of a value; throws std::out_of_range outside the covered range.
std::size_t bin_of(double value, const SliceSpec& spec);

std::vector<Tensor<float>> slice_image(const Tensor<float>& image, const SliceSpec& spec);
std::vector<Image> slice_image(const Image& image, const SliceSpec& spec);

// Slices `count` packed (H, W, 3) byte images starting at `pixels` into one
// NHWC batch per slice, multiplying kept values by `scale` (1/255 at graph
// input). `out` is resized to num_slices tensors of shape (count, H, W, 3).
void slice_batch(std::span<const std::uint8_t> pixels, std::size_t count, std::size_t height,
                 std::size_t width, const SliceSpec& spec, float scale,
                 std::vector<Tensor<float>>& out);

}  // namespace stnet
