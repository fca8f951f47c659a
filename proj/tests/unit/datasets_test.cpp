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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include "stnet/datasets.hpp"
#include "stnet/harness.hpp"
#include "stnet/zoo.hpp"

namespace stnet {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stnet_datasets_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<int, std::size_t> histogram(const LabeledImageSet& s) {
  std::map<int, std::size_t> h;
  for (int l : s.labels()) ++h[l];
  return h;
}

TEST(Datasets, RecordLayoutIsChannelPlanar) {
  LabeledImageSet set(32, 32);
  Image img = make_image(32, 32);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x)
      for (std::size_t c = 0; c < 3; ++c) img[(y * 32 + x) * 3 + c] = static_cast<std::uint8_t>(y * 7 + x * 3 + c * 50);
  set.push_back(img, 7, 0);
  set.push_back(make_image(32, 32, 9), 2, 1);
  const fs::path dir = scratch("layout");
  write_cifar_records(set, dir / "r.bin");
  const auto bytes = read_bytes(dir / "r.bin");
  ASSERT_EQ(bytes.size(), 2 * kCifarRecordBytes);
  EXPECT_EQ(bytes[0], 7);
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        ASSERT_EQ(bytes[1 + c * 1024 + y * 32 + x], img[(y * 32 + x) * 3 + c]);
      }
  EXPECT_EQ(bytes[kCifarRecordBytes], 2);
  const LabeledImageSet back = read_cifar_records(dir / "r.bin", 40);
  EXPECT_EQ(back.image(0), img);
  EXPECT_EQ(back.labels(), (std::vector<int>{7, 2}));
  EXPECT_EQ(back.ids(), (std::vector<std::uint64_t>{40, 41}));
}

TEST(Datasets, RecordErrors) {
  const fs::path dir = scratch("errors");
  EXPECT_THROW(read_cifar_records(dir / "absent.bin"), DatasetError);
  {
    std::ofstream out(dir / "short.bin", std::ios::binary);
    out << std::string(kCifarRecordBytes + 5, '\0');
  }
  EXPECT_THROW(read_cifar_records(dir / "short.bin"), DatasetError);
  {
    std::string rec(kCifarRecordBytes, '\0');
    rec[0] = 10;
    std::ofstream out(dir / "label.bin", std::ios::binary);
    out << rec;
  }
  try {
    read_cifar_records(dir / "label.bin");
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("label"), std::string::npos);
  }
  LabeledImageSet bad(16, 16);
  bad.push_back(make_image(16, 16), 0, 0);
  EXPECT_THROW(write_cifar_records(bad, dir / "bad.bin"), DatasetError);
}

class CifarFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch("fixture"));
    write_cifar10_fixture(*dir_, 5);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }
  static fs::path* dir_;
};

fs::path* CifarFixture::dir_ = nullptr;

TEST_F(CifarFixture, LoadsFullSplitWithBalancedClasses) {
  for (const char* f : {"data_batch_1.bin", "data_batch_5.bin", "test_batch.bin"}) {
    EXPECT_EQ(fs::file_size(*dir_ / f), kCifarFileBytes) << f;
  }
  const CifarSplit split = load_cifar10(*dir_);
  EXPECT_EQ(split.train.size(), 50000u);
  EXPECT_EQ(split.test.size(), 10000u);
  for (const auto& [label, count] : histogram(split.train)) EXPECT_EQ(count, 5000u) << label;
  for (const auto& [label, count] : histogram(split.test)) EXPECT_EQ(count, 1000u) << label;
  EXPECT_EQ(histogram(split.train).size(), 10u);
  EXPECT_EQ(split.test.id(0), kCifarTestIdBase);
  EXPECT_EQ(split.train.id(49999), 49999u);
  // Bit-identical on reload.
  EXPECT_EQ(load_cifar10(*dir_).test, split.test);
}

TEST_F(CifarFixture, FindsNestedBatchDirectory) {
  const fs::path outer = scratch("nested");
  fs::create_directories(outer / "cifar-10-batches-bin");
  for (const auto& e : fs::directory_iterator(*dir_)) {
    fs::create_symlink(e.path(), outer / "cifar-10-batches-bin" / e.path().filename());
  }
  EXPECT_EQ(load_cifar10(outer).train.size(), 50000u);
  fs::remove_all(outer);
}

TEST_F(CifarFixture, TruncatedOrMissingFilesRejected) {
  const fs::path broken = scratch("broken");
  for (const auto& e : fs::directory_iterator(*dir_)) fs::copy_file(e.path(), broken / e.path().filename());
  fs::resize_file(broken / "data_batch_3.bin", kCifarFileBytes - 1);
  try {
    load_cifar10(broken);
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("wrong file size"), std::string::npos);
  }
  fs::remove(broken / "data_batch_3.bin");
  try {
    load_cifar10(broken);
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("missing file"), std::string::npos);
  }
  fs::remove_all(broken);
}

TEST(Datasets, SynthShapesDeterministicAndBalanced) {
  const LabeledImageSet a = synth_shapes(100, 10, 3);
  EXPECT_EQ(a, synth_shapes(100, 10, 3));
  EXPECT_NE(a, synth_shapes(100, 10, 4));
  for (const auto& [label, count] : histogram(a)) EXPECT_EQ(count, 10u);
  const LabeledImageSet b = synth_shapes(23, 4, 1, 77);
  for (const auto& [label, count] : histogram(b)) EXPECT_NEAR(static_cast<double>(count), 23.0 / 4, 1.0);
  EXPECT_EQ(b.id(0), 77u);
  EXPECT_THROW(synth_shapes(3, 4, 0), std::invalid_argument);
  EXPECT_THROW(synth_shapes(30, 11, 0), std::invalid_argument);
  EXPECT_EQ(synth_shapes(10, 2, 0, 0, 16).height(), 16u);
}

TEST(Datasets, SynthShapesAreSeparable) {
  const LabeledImageSet data = synth_shapes(500, 10, 11);
  Graph<float> g = compile<float>(minivgg_desc(), 1);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 32;
  cfg.optimizer.kind = OptimizerKind::kAdam;
  cfg.optimizer.lr = 2e-3;
  cfg.seed = 1;
  train(g, data, cfg);
  EXPECT_GE(evaluate(g, data, cfg.slice), 0.90);
}

void expect_partition(const LabeledImageSet& in, const SplitResult& s) {
  std::multiset<std::uint64_t> all(in.ids().begin(), in.ids().end());
  std::multiset<std::uint64_t> got(s.to_train.ids().begin(), s.to_train.ids().end());
  got.insert(s.to_test.ids().begin(), s.to_test.ids().end());
  EXPECT_EQ(got, all);
  std::set<std::uint64_t> train_ids(s.to_train.ids().begin(), s.to_train.ids().end());
  for (auto id : s.to_test.ids()) EXPECT_EQ(train_ids.count(id), 0u);
}

TEST(Datasets, AugmentationSplitIsStratifiedPartition) {
  const LabeledImageSet set = synth_shapes(100, 10, 2);
  const SplitResult s = augmentation_split(set, 0.5, 9);
  EXPECT_EQ(s.to_train.size(), 50u);
  EXPECT_EQ(s.to_test.size(), 50u);
  expect_partition(set, s);
  const auto ht = histogram(s.to_train), hs = histogram(s.to_test);
  for (int c = 0; c < 10; ++c) {
    EXPECT_LE(std::abs(static_cast<long>(ht.at(c)) - static_cast<long>(hs.at(c))), 1);
  }
  // Pixels travel with their ids.
  for (std::size_t i = 0; i < s.to_train.size(); ++i) {
    const std::uint64_t id = s.to_train.id(i);
    EXPECT_EQ(s.to_train.image(i), set.image(id));
    EXPECT_EQ(s.to_train.label(i), set.label(id));
  }
}

TEST(Datasets, AugmentationSplitSeedContract) {
  const LabeledImageSet set = synth_shapes(200, 10, 2);
  EXPECT_EQ(augmentation_split(set, 0.5, 1).to_train, augmentation_split(set, 0.5, 1).to_train);
  EXPECT_NE(augmentation_split(set, 0.5, 1).to_train, augmentation_split(set, 0.5, 2).to_train);
}

TEST(Datasets, AugmentationSplitUnevenSizes) {
  const LabeledImageSet set = synth_shapes(37, 3, 5);
  for (bool stratified : {true, false}) {
    for (double f : {0.1, 0.3, 0.5, 0.9}) {
      const SplitResult s = augmentation_split(set, f, 4, stratified);
      EXPECT_EQ(s.to_train.size(), static_cast<std::size_t>(std::lround(f * 37))) << f;
      expect_partition(set, s);
    }
  }
  EXPECT_THROW(augmentation_split(set, 0.0, 0), std::invalid_argument);
  EXPECT_THROW(augmentation_split(set, 1.0, 0), std::invalid_argument);
  EXPECT_THROW(augmentation_split(LabeledImageSet(32, 32), 0.5, 0), std::invalid_argument);
}

TEST(Datasets, StratifiedSubset) {
  const LabeledImageSet set = synth_shapes(1000, 10, 6);
  const LabeledImageSet sub = stratified_subset(set, 200, 0);
  EXPECT_EQ(sub.size(), 200u);
  for (const auto& [label, count] : histogram(sub)) EXPECT_EQ(count, 20u);
  EXPECT_EQ(stratified_subset(set, 1000, 0), set);
  EXPECT_THROW(stratified_subset(set, 0, 0), std::invalid_argument);
  EXPECT_THROW(stratified_subset(set, 1001, 0), std::invalid_argument);
}

TEST(Datasets, ImageSetSubsetAndAppend) {
  LabeledImageSet a = synth_shapes(10, 5, 1);
  const std::size_t idx[] = {9, 0, 4};
  const LabeledImageSet s = a.subset(idx);
  EXPECT_EQ(s.ids(), (std::vector<std::uint64_t>{9, 0, 4}));
  EXPECT_EQ(s.image(0), a.image(9));
  LabeledImageSet b = a;
  b.append(s);
  EXPECT_EQ(b.size(), 13u);
  EXPECT_EQ(b.image(12), a.image(4));
  EXPECT_THROW(b.append(synth_shapes(5, 5, 1, 0, 16)), std::invalid_argument);
  EXPECT_EQ(a.num_classes_seen(), 5u);
}

}  // namespace
}  // namespace stnet
