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

#include "stnet/slicer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stnet {

std::string_view slice_mode_name(SliceMode mode) {
  return mode == SliceMode::kPixelLuminance ? "pixel-luminance" : "per-channel";
}

std::optional<SliceMode> parse_slice_mode(std::string_view text) {
  if (text == "pixel-luminance" || text == "luminance") return SliceMode::kPixelLuminance;
  if (text == "per-channel" || text == "channel") return SliceMode::kPerChannel;
  return std::nullopt;
}

SliceSpec make_spec(std::size_t num_slices, SliceMode mode) {
  if (num_slices == 0) throw std::invalid_argument("slice count must be at least 1");
  SliceSpec spec;
  spec.num_slices = num_slices;
  spec.mode = mode;
  spec.edges.resize(num_slices + 1);
  for (std::size_t k = 0; k <= num_slices; ++k) {
    spec.edges[k] = 256.0 * static_cast<double>(k) / static_cast<double>(num_slices);
  }
  return spec;
}

void check_spec(const SliceSpec& spec) {
  if (spec.num_slices == 0) throw std::invalid_argument("slice count must be at least 1");
  if (spec.edges.size() != spec.num_slices + 1) {
    throw std::invalid_argument("slice spec needs " + std::to_string(spec.num_slices + 1) +
                                " edges, has " + std::to_string(spec.edges.size()));
  }
  if (spec.edges.front() != 0.0 || spec.edges.back() != 256.0) {
    throw std::invalid_argument("slice edges must span [0, 256]");
  }
  for (std::size_t k = 1; k < spec.edges.size(); ++k) {
    if (!(spec.edges[k] > spec.edges[k - 1])) {
      throw std::invalid_argument("slice edges must be strictly increasing");
    }
  }
}

std::size_t bin_of(double value, const SliceSpec& spec) {
  const auto& e = spec.edges;
  const std::size_t n = spec.num_slices;
  if (!(value >= e[0]) || value > e[n] || (value == e[n] && !spec.include_upper_on_last)) {
    throw std::out_of_range("pixel value " + std::to_string(value) + " outside [0, 256)");
  }
  // Few bins in practice; a linear scan keeps the boundary rule obvious.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (value < e[k + 1]) return k;
  }
  return n - 1;
}

namespace {

// Writes slices of one (H, W, 3) image. `value(i)` yields the raw 0..255
// value of element i; each out[k] points at the image's place in stream k.
template <typename Get, typename Out>
void slice_one(std::size_t pixels, const SliceSpec& spec, Get value, float scale,
               std::vector<Out*>& out) {
  const std::size_t n = spec.num_slices;
  if (spec.mode == SliceMode::kPixelLuminance) {
    for (std::size_t p = 0; p < pixels; ++p) {
      const double r = value(3 * p), g = value(3 * p + 1), b = value(3 * p + 2);
      for (double v : {r, g, b}) bin_of(v, spec);  // range check
      const std::size_t k = bin_of((r + g + b) / 3.0, spec);
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t c = 0; c < 3; ++c) {
          out[s][3 * p + c] =
              s == k ? static_cast<Out>(value(3 * p + c) * scale) : static_cast<Out>(0);
        }
      }
    }
    return;
  }
  for (std::size_t i = 0; i < 3 * pixels; ++i) {
    const double v = value(i);
    const std::size_t k = bin_of(v, spec);
    for (std::size_t s = 0; s < n; ++s) {
      out[s][i] = s == k ? static_cast<Out>(v * scale) : static_cast<Out>(0);
    }
  }
}

}  // namespace

std::vector<Tensor<float>> slice_image(const Tensor<float>& image, const SliceSpec& spec) {
  check_rgb(image);
  check_spec(spec);
  std::vector<Tensor<float>> slices(spec.num_slices, Tensor<float>(image.shape()));
  std::vector<float*> out;
  for (auto& s : slices) out.push_back(s.raw());
  slice_one(image.dim(0) * image.dim(1), spec,
            [&](std::size_t i) { return static_cast<double>(image[i]); }, 1.0f, out);
  return slices;
}

std::vector<Image> slice_image(const Image& image, const SliceSpec& spec) {
  check_rgb(image);
  check_spec(spec);
  std::vector<Image> slices(spec.num_slices, Image(image.shape()));
  std::vector<std::uint8_t*> out;
  for (auto& s : slices) out.push_back(s.raw());
  slice_one(image.dim(0) * image.dim(1), spec,
            [&](std::size_t i) { return static_cast<double>(image[i]); }, 1.0f, out);
  return slices;
}

void slice_batch(std::span<const std::uint8_t> pixels, std::size_t count, std::size_t height,
                 std::size_t width, const SliceSpec& spec, float scale,
                 std::vector<Tensor<float>>& out) {
  check_spec(spec);
  const std::size_t per_image = height * width * 3;
  if (pixels.size() < count * per_image) {
    throw std::invalid_argument("slice_batch: not enough pixel data");
  }
  out.resize(spec.num_slices);
  const Shape shape{count, height, width, 3};
  for (auto& t : out) {
    if (t.shape() != shape) t = Tensor<float>(shape);
  }
  std::vector<float*> dst(spec.num_slices);
  for (std::size_t n = 0; n < count; ++n) {
    const std::uint8_t* src = pixels.data() + n * per_image;
    for (std::size_t s = 0; s < spec.num_slices; ++s) dst[s] = out[s].raw() + n * per_image;
    slice_one(height * width, spec, [src](std::size_t i) { return static_cast<double>(src[i]); },
              scale, dst);
  }
}

}  // namespace stnet
