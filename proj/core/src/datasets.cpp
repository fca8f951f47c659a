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

#include "stnet/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "stnet/rng.hpp"

namespace stnet {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kPlane = 32 * 32;

void decode_records(const std::vector<char>& bytes, std::size_t count, const fs::path& file,
                    std::uint64_t id_base, LabeledImageSet& out) {
  std::array<std::uint8_t, 3 * kPlane> hwc{};
  for (std::size_t r = 0; r < count; ++r) {
    const auto* rec = reinterpret_cast<const std::uint8_t*>(bytes.data()) + r * kCifarRecordBytes;
    if (rec[0] > 9) {
      throw DatasetError(file.string() + ": record " + std::to_string(r) + " has label " +
                         std::to_string(rec[0]) + " > 9");
    }
    for (std::size_t p = 0; p < kPlane; ++p)
      for (std::size_t c = 0; c < 3; ++c) hwc[3 * p + c] = rec[1 + c * kPlane + p];
    out.push_back(hwc, rec[0], id_base + r);
  }
}

std::vector<char> read_all(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DatasetError(file.string() + ": missing file");
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

LabeledImageSet read_batch(const fs::path& file, std::uint64_t id_base) {
  std::error_code ec;
  if (!fs::exists(file, ec)) throw DatasetError(file.string() + ": missing file");
  const auto size = fs::file_size(file, ec);
  if (ec || size != kCifarFileBytes) {
    throw DatasetError(file.string() + ": wrong file size " + std::to_string(size) +
                       ", expected " + std::to_string(kCifarFileBytes));
  }
  const std::vector<char> bytes = read_all(file);
  if (bytes.size() != kCifarFileBytes) throw DatasetError(file.string() + ": wrong file size");
  LabeledImageSet out(32, 32, 3);
  out.reserve(kCifarRecordsPerFile);
  decode_records(bytes, kCifarRecordsPerFile, file, id_base, out);
  return out;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

bool inside_shape(std::size_t cls, double u, double v) {
  const double au = std::fabs(u), av = std::fabs(v);
  const double r = std::hypot(u, v);
  switch (cls) {
    case 0: return r <= 1.0;                                   // disk
    case 1: return au <= 0.8 && av <= 0.8;                     // square
    case 2: return v <= 0.8 && v >= -0.8 && au <= (v + 0.8) * 0.6;  // triangle
    case 3: return au <= 1.0 && av <= 0.3;                     // horizontal bar
    case 4: return au <= 0.3 && av <= 1.0;                     // vertical bar
    case 5: return (au <= 0.25 && av <= 1.0) || (av <= 0.25 && au <= 1.0);  // cross
    case 6: return r <= 1.0 && r >= 0.55;                      // ring
    case 7: return au + av <= 1.0;                             // diamond
    case 8: return std::hypot(u - 0.5, v) <= 0.4 || std::hypot(u + 0.5, v) <= 0.4;  // two dots
    default: return std::fabs(u - v) <= 0.35 && au <= 1.0 && av <= 1.0;  // diagonal stroke
  }
}

}  // namespace

CifarSplit load_cifar10(const fs::path& directory) {
  fs::path dir = directory;
  if (!fs::exists(dir / "data_batch_1.bin") && fs::exists(dir / "cifar-10-batches-bin")) {
    dir /= "cifar-10-batches-bin";
  }
  CifarSplit split{LabeledImageSet(32, 32, 3), LabeledImageSet(32, 32, 3)};
  split.train.reserve(5 * kCifarRecordsPerFile);
  for (int b = 1; b <= 5; ++b) {
    const auto id_base = static_cast<std::uint64_t>(b - 1) * kCifarRecordsPerFile;
    split.train.append(read_batch(dir / ("data_batch_" + std::to_string(b) + ".bin"), id_base));
  }
  split.test = read_batch(dir / "test_batch.bin", kCifarTestIdBase);
  split.train.set_provenance("clean");
  split.test.set_provenance("clean");
  return split;
}

LabeledImageSet read_cifar_records(const fs::path& file, std::uint64_t id_base) {
  const std::vector<char> bytes = read_all(file);
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw DatasetError(file.string() + ": wrong file size " + std::to_string(bytes.size()) +
                       " is not a multiple of " + std::to_string(kCifarRecordBytes));
  }
  LabeledImageSet out(32, 32, 3);
  const std::size_t count = bytes.size() / kCifarRecordBytes;
  out.reserve(count);
  decode_records(bytes, count, file, id_base, out);
  return out;
}

void write_cifar_records(const LabeledImageSet& set, const fs::path& file) {
  if (set.height() != 32 || set.width() != 32 || set.channels() != 3) {
    throw DatasetError("record format needs 32x32x3 images");
  }
  std::vector<char> bytes(set.size() * kCifarRecordBytes);
  for (std::size_t r = 0; r < set.size(); ++r) {
    if (set.label(r) > 9) throw DatasetError("label " + std::to_string(set.label(r)) + " > 9");
    char* rec = bytes.data() + r * kCifarRecordBytes;
    rec[0] = static_cast<char>(set.label(r));
    const auto px = set.pixels(r);
    for (std::size_t p = 0; p < kPlane; ++p)
      for (std::size_t c = 0; c < 3; ++c) rec[1 + c * kPlane + p] = static_cast<char>(px[3 * p + c]);
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(file.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DatasetError(file.string() + ": write failed");
}

void write_cifar10_fixture(const fs::path& directory, std::uint64_t seed) {
  fs::create_directories(directory);
  for (int b = 0; b < 6; ++b) {
    const std::string name = b < 5 ? "data_batch_" + std::to_string(b + 1) + ".bin" : "test_batch.bin";
    write_cifar_records(synth_shapes(kCifarRecordsPerFile, 10, mix_seed(seed, b)), directory / name);
  }
}

LabeledImageSet synth_shapes(std::size_t n, std::size_t classes, std::uint64_t seed,
                             std::uint64_t id_base, std::size_t size) {
  if (classes == 0 || classes > 10) throw std::invalid_argument("synth_shapes supports 1..10 classes");
  if (classes > n) throw std::invalid_argument("synth_shapes needs n >= classes");
  LabeledImageSet out(size, size, 3);
  out.set_provenance("synth-shapes/seed=" + std::to_string(seed));
  out.reserve(n);
  std::vector<std::uint8_t> px(size * size * 3);
  const double side = static_cast<double>(size);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, i));
    const std::size_t cls = i % classes;
    const double scale = side * rng.uniform(0.22, 0.38);
    const double cx = side / 2.0 + rng.uniform(-0.15, 0.15) * side;
    const double cy = side / 2.0 + rng.uniform(-0.15, 0.15) * side;
    std::array<double, 3> bg{}, fg{};
    const double bg_level = rng.uniform(10.0, 110.0);
    const double fg_level = rng.uniform(130.0, 245.0);
    for (std::size_t c = 0; c < 3; ++c) {
      bg[c] = bg_level + rng.uniform(-10.0, 10.0);
      fg[c] = fg_level + rng.uniform(-10.0, 10.0);
    }
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const double u = (static_cast<double>(x) + 0.5 - cx) / scale;
        const double v = (static_cast<double>(y) + 0.5 - cy) / scale;
        const bool in = inside_shape(cls, u, v);
        for (std::size_t c = 0; c < 3; ++c) {
          const double value = (in ? fg[c] : bg[c]) + rng.normal(0.0, 6.0);
          px[(y * size + x) * 3 + c] = to_u8(value);
        }
      }
    out.push_back(px, static_cast<int>(cls), id_base + i);
  }
  return out;
}

void split_indices(const std::vector<int>& labels, double fraction, std::uint64_t seed,
                   bool stratified, std::vector<std::size_t>& train_idx,
                   std::vector<std::size_t>& test_idx) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("split fraction must be in (0, 1)");
  }
  train_idx.clear();
  test_idx.clear();
  const std::size_t total = labels.size();
  const auto want = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  Rng rng(seed);
  if (!stratified) {
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(want));
    test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(want), order.end());
  } else {
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < total; ++i) by_label[labels[i]].push_back(i);
    // Largest-remainder allocation of `want` across labels.
    struct Alloc { int label; std::size_t take; double rem; };
    std::vector<Alloc> alloc;
    std::size_t assigned = 0;
    for (const auto& [label, idx] : by_label) {
      const double exact = fraction * static_cast<double>(idx.size());
      const auto base = static_cast<std::size_t>(std::floor(exact));
      alloc.push_back({label, base, exact - static_cast<double>(base)});
      assigned += base;
    }
    std::vector<std::size_t> order(alloc.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return alloc[a].rem > alloc[b].rem; });
    for (std::size_t k = 0; assigned < want && k < order.size(); ++k, ++assigned) {
      alloc[order[k]].take += 1;
    }
    for (const Alloc& a : alloc) {
      std::vector<std::size_t> idx = by_label[a.label];
      shuffle(idx, rng);
      train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(a.take));
      test_idx.insert(test_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(a.take), idx.end());
    }
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
}

SplitResult augmentation_split(const LabeledImageSet& set, double fraction, std::uint64_t seed,
                               bool stratified) {
  if (set.empty()) throw std::invalid_argument("cannot split an empty set");
  std::vector<std::size_t> train_idx, test_idx;
  split_indices(set.labels(), fraction, seed, stratified, train_idx, test_idx);
  return {set.subset(train_idx), set.subset(test_idx)};
}

LabeledImageSet stratified_subset(const LabeledImageSet& set, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n > set.size()) throw std::invalid_argument("subset size out of range");
  if (n == set.size()) return set;
  std::vector<std::size_t> keep, rest;
  split_indices(set.labels(), static_cast<double>(n) / static_cast<double>(set.size()), seed, true,
                keep, rest);
  return set.subset(keep);
}

}  // namespace stnet
