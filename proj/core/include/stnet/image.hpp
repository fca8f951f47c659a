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
#include <span>
#include <string>
#include <vector>

#include "stnet/tensor.hpp"

namespace stnet {

// (H, W, C) image with integer intensities 0..255.
using Image = Tensor<std::uint8_t>;

Image make_image(std::size_t height, std::size_t width, std::uint8_t fill = 0);

// Throws std::invalid_argument unless the tensor is (H, W, 3).
template <typename T>
void check_rgb(const Tensor<T>& image);

// Unnormalized conversion: values stay on the 0..255 scale.
Tensor<float> to_float(const Image& image);

// Rounds half away from zero and clamps to [0, 255].
std::uint8_t to_u8(double value);
Image to_u8(const Tensor<float>& image);
Image to_u8(const Tensor<double>& image);

// Images kept as one contiguous N*H*W*C byte array. Ids identify the
// underlying source image and survive corruption and splitting, which is
// what the leakage checks compare.
class LabeledImageSet {
 public:
  LabeledImageSet() = default;
  LabeledImageSet(std::size_t height, std::size_t width, std::size_t channels = 3);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t image_size() const noexcept { return height_ * width_ * channels_; }

  std::span<const std::uint8_t> pixels(std::size_t i) const;
  std::span<std::uint8_t> pixels(std::size_t i);
  std::span<const std::uint8_t> all_pixels() const noexcept { return pixels_; }
  Image image(std::size_t i) const;
  int label(std::size_t i) const { return labels_.at(i); }
  std::uint64_t id(std::size_t i) const { return ids_.at(i); }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::uint64_t>& ids() const noexcept { return ids_; }

  void push_back(std::span<const std::uint8_t> pixels, int label, std::uint64_t id);
  void push_back(const Image& image, int label, std::uint64_t id);
  void reserve(std::size_t n);

  LabeledImageSet subset(std::span<const std::size_t> indices) const;
  // Concatenation; geometry must match.
  void append(const LabeledImageSet& other);

  // "clean" or e.g. "gaussian-noise/3/seed=7".
  const std::string& provenance() const noexcept { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }

  std::size_t num_classes_seen() const;

  friend bool operator==(const LabeledImageSet& a, const LabeledImageSet& b) = default;

 private:
  std::size_t height_ = 32;
  std::size_t width_ = 32;
  std::size_t channels_ = 3;
  std::vector<std::uint8_t> pixels_;
  std::vector<int> labels_;
  std::vector<std::uint64_t> ids_;
  std::string provenance_ = "clean";
};

}  // namespace stnet
