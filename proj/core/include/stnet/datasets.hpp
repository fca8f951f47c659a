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
#include <filesystem>
#include <stdexcept>
#include <string>

#include "stnet/image.hpp"

namespace stnet {

inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * 32 * 32;
inline constexpr std::size_t kCifarRecordsPerFile = 10000;
inline constexpr std::size_t kCifarFileBytes = kCifarRecordBytes * kCifarRecordsPerFile;
// Test images get ids offset by this so train and test ids never collide.
inline constexpr std::uint64_t kCifarTestIdBase = 1'000'000;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CifarSplit {
  LabeledImageSet train;
  LabeledImageSet test;
};

// Reads data_batch_{1..5}.bin and test_batch.bin from `directory` or its
// cifar-10-batches-bin subdirectory. Each file must hold exactly 10,000
// records of 1 label byte plus planar R, G, B 32x32 planes.
CifarSplit load_cifar10(const std::filesystem::path& directory);

// Record-format I/O for any record count (corrupted sets, fixtures).
LabeledImageSet read_cifar_records(const std::filesystem::path& file, std::uint64_t id_base = 0);
void write_cifar_records(const LabeledImageSet& set, const std::filesystem::path& file);

// Writes all six CIFAR-10 batch files filled with synthetic shapes,
// 1,000 images per class per file.
void write_cifar10_fixture(const std::filesystem::path& directory, std::uint64_t seed);

// Filled shapes (disk, square, triangle, bars, cross, ring, diamond, ...)
// at random position, scale and color over a darker textured background.
// Label i % classes, so classes are balanced within 1. classes must be in
// 1..10 and at most n.
LabeledImageSet synth_shapes(std::size_t n, std::size_t classes, std::uint64_t seed,
                             std::uint64_t id_base = 0, std::size_t size = 32);

struct SplitResult {
  LabeledImageSet to_train;
  LabeledImageSet to_test;
};

// Disjoint, exhaustive split with |to_train| = round(fraction * N). The
// stratified form allocates per-label counts by largest remainder.
SplitResult augmentation_split(const LabeledImageSet& set, double fraction, std::uint64_t seed,
                               bool stratified = true);

// Index form of the split, sorted ascending within each half.
void split_indices(const std::vector<int>& labels, double fraction, std::uint64_t seed,
                   bool stratified, std::vector<std::size_t>& train_idx,
                   std::vector<std::size_t>& test_idx);

// Stratified random subset of n images, kept in source order.
LabeledImageSet stratified_subset(const LabeledImageSet& set, std::size_t n, std::uint64_t seed);

}  // namespace stnet
