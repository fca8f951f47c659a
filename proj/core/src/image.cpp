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

#include "stnet/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stnet {

Image make_image(std::size_t height, std::size_t width, std::uint8_t fill) {
  return Image({height, width, 3}, fill);
}

template <typename T>
void check_rgb(const Tensor<T>& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw std::invalid_argument("expected an (H, W, 3) image, got " +
                                shape_to_string(image.shape()));
  }
}

template void check_rgb(const Tensor<std::uint8_t>&);
template void check_rgb(const Tensor<float>&);
template void check_rgb(const Tensor<double>&);

Tensor<float> to_float(const Image& image) { return image.cast<float>(); }

std::uint8_t to_u8(double value) {
  if (!(value > 0.0)) return 0;  // also maps NaN to 0
  if (value >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(value));
}

namespace {
template <typename T>
Image to_u8_impl(const Tensor<T>& image) {
  Image out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = to_u8(image[i]);
  return out;
}
}  // namespace

Image to_u8(const Tensor<float>& image) { return to_u8_impl(image); }
Image to_u8(const Tensor<double>& image) { return to_u8_impl(image); }

LabeledImageSet::LabeledImageSet(std::size_t height, std::size_t width, std::size_t channels)
    : height_(height), width_(width), channels_(channels) {
  if (height == 0 || width == 0 || channels == 0) {
    throw std::invalid_argument("image set geometry must be positive");
  }
}

std::span<const std::uint8_t> LabeledImageSet::pixels(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("image index " + std::to_string(i));
  return {pixels_.data() + i * image_size(), image_size()};
}

std::span<std::uint8_t> LabeledImageSet::pixels(std::size_t i) {
  if (i >= size()) throw std::out_of_range("image index " + std::to_string(i));
  return {pixels_.data() + i * image_size(), image_size()};
}

Image LabeledImageSet::image(std::size_t i) const {
  const auto px = pixels(i);
  return Image({height_, width_, channels_}, std::vector<std::uint8_t>(px.begin(), px.end()));
}

void LabeledImageSet::push_back(std::span<const std::uint8_t> pixels, int label,
                                std::uint64_t id) {
  if (pixels.size() != image_size()) {
    throw std::invalid_argument("image has " + std::to_string(pixels.size()) +
                                " values, set expects " + std::to_string(image_size()));
  }
  if (label < 0) throw std::invalid_argument("negative label");
  pixels_.insert(pixels_.end(), pixels.begin(), pixels.end());
  labels_.push_back(label);
  ids_.push_back(id);
}

void LabeledImageSet::push_back(const Image& image, int label, std::uint64_t id) {
  if (image.shape() != Shape{height_, width_, channels_}) {
    throw std::invalid_argument("image shape " + shape_to_string(image.shape()) +
                                " does not match set geometry");
  }
  push_back(image.data(), label, id);
}

void LabeledImageSet::reserve(std::size_t n) {
  pixels_.reserve(n * image_size());
  labels_.reserve(n);
  ids_.reserve(n);
}

LabeledImageSet LabeledImageSet::subset(std::span<const std::size_t> indices) const {
  LabeledImageSet out(height_, width_, channels_);
  out.provenance_ = provenance_;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(pixels(i), labels_[i], ids_[i]);
  return out;
}

void LabeledImageSet::append(const LabeledImageSet& other) {
  if (other.height_ != height_ || other.width_ != width_ || other.channels_ != channels_) {
    throw std::invalid_argument("cannot append image sets of different geometry");
  }
  pixels_.insert(pixels_.end(), other.pixels_.begin(), other.pixels_.end());
  labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
  ids_.insert(ids_.end(), other.ids_.begin(), other.ids_.end());
}

std::size_t LabeledImageSet::num_classes_seen() const {
  if (labels_.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels_.begin(), labels_.end())) + 1;
}

}  // namespace stnet
