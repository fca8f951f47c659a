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
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include "stnet/corruptions.hpp"
#include "stnet/rng.hpp"

namespace stnet {
namespace {

Image random_image(std::uint64_t seed, int lo = 0, int hi = 255, std::size_t h = 32, std::size_t w = 32) {
  Rng rng(seed);
  Image img = make_image(h, w);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(lo + static_cast<int>(rng.below(hi - lo + 1)));
  return img;
}

double max_level_diff(const Image& a, const Image& b) {
  int m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(int{a[i]} - int{b[i]}));
  return m;
}

class EveryKind : public ::testing::TestWithParam<CorruptionKind> {};

TEST_P(EveryKind, DeterministicUnderSeedAndInRange) {
  const Image img = random_image(1);
  for (int sev = 1; sev <= kMaxSeverity; ++sev) {
    const Corruption c{GetParam(), sev, 77, std::nullopt};
    const Image a = apply(img, c);
    EXPECT_EQ(a, apply(img, c));
    EXPECT_EQ(a.shape(), img.shape());
    if (!is_stochastic(GetParam())) {
      EXPECT_EQ(a, apply(img, Corruption{GetParam(), sev, 78, std::nullopt})) << "seed must be ignored";
    }
  }
}

TEST_P(EveryKind, StrongestSeverityChangesTheImage) {
  const Image img = random_image(2, 30, 220);
  EXPECT_NE(apply(img, Corruption{GetParam(), kMaxSeverity, 5, std::nullopt}), img);
}

TEST_P(EveryKind, NullStrengthIsIdentity) {
  const SeverityParameter& sp = severity_parameter(GetParam());
  const Image img = random_image(3);
  const Image out = apply(img, Corruption{GetParam(), 1, 9, sp.null_value});
  EXPECT_EQ(out, img) << corruption_name(GetParam());
}

TEST_P(EveryKind, SeverityTableIsMonotone) {
  const SeverityParameter& sp = severity_parameter(GetParam());
  for (int i = 1; i < kMaxSeverity; ++i) {
    if (sp.stronger_when_larger) {
      EXPECT_GT(sp.values[i], sp.values[i - 1]) << corruption_name(GetParam());
    } else {
      EXPECT_LT(sp.values[i], sp.values[i - 1]) << corruption_name(GetParam());
    }
  }
  // The null value lies beyond the mildest table entry.
  if (sp.stronger_when_larger) {
    EXPECT_LT(sp.null_value, sp.values[0]);
  } else {
    EXPECT_GT(sp.null_value, sp.values[0]);
  }
}

TEST_P(EveryKind, NameRoundTrip) {
  EXPECT_EQ(parse_corruption(corruption_name(GetParam())), GetParam());
}

INSTANTIATE_TEST_SUITE_P(Kinds, EveryKind, ::testing::ValuesIn(all_corruption_kinds()),
                         [](const auto& info) {
                           std::string n(corruption_name(info.param));
                           std::replace(n.begin(), n.end(), '-', '_');
                           return n;
                         });

TEST(Corruptions, FourteenDistinctKinds) {
  std::set<std::string_view> names;
  for (CorruptionKind k : all_corruption_kinds()) names.insert(corruption_name(k));
  EXPECT_EQ(names.size(), kNumCorruptionKinds);
  EXPECT_FALSE(parse_corruption("fog").has_value());
  EXPECT_NE(corruption_names_list().find("elastic-transform"), std::string::npos);
}

TEST(Corruptions, SeverityOutsideRangeRejected) {
  const Image img = random_image(4);
  EXPECT_THROW(apply(img, Corruption{CorruptionKind::kBrightness, 0, 0, std::nullopt}), std::invalid_argument);
  EXPECT_THROW(apply(img, Corruption{CorruptionKind::kBrightness, 6, 0, std::nullopt}), std::invalid_argument);
  EXPECT_THROW(apply(Image({4, 4, 1}), Corruption{}), std::invalid_argument);
}

TEST(Corruptions, TinyBlursApproximateIdentity) {
  const Image img = random_image(5);
  for (CorruptionKind k : {CorruptionKind::kGaussianBlur, CorruptionKind::kDefocusBlur}) {
    EXPECT_LE(max_level_diff(apply(img, Corruption{k, 1, 0, 0.05}), img), 1.0) << corruption_name(k);
  }
  EXPECT_LE(max_level_diff(apply(img, Corruption{CorruptionKind::kZoomBlur, 1, 0, 1.001}), img), 1.0);
}

TEST(Corruptions, GaussianNoiseIsZeroMean) {
  const Image img = random_image(6, 60, 190);
  for (int sev = 1; sev <= kMaxSeverity; ++sev) {
    double total = 0.0;
    const int seeds = 30;
    for (int s = 0; s < seeds; ++s) {
      const Image out = apply(img, Corruption{CorruptionKind::kGaussianNoise, sev, static_cast<std::uint64_t>(s),
                                              std::nullopt});
      double d = 0.0;
      for (std::size_t i = 0; i < img.size(); ++i) d += static_cast<double>(out[i]) - static_cast<double>(img[i]);
      total += d / static_cast<double>(img.size());
    }
    EXPECT_NEAR(total / seeds, 0.0, 1.5) << "severity " << sev;
  }
}

TEST(Corruptions, GaussianNoiseSpreadMatchesSigma) {
  // Mid-grey keeps clipping out of play at severity 1.
  const Image img = make_image(64, 64, 128);
  const Image out = apply(img, Corruption{CorruptionKind::kGaussianNoise, 1, 3, std::nullopt});
  double sq = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) sq += std::pow(static_cast<double>(out[i]) - 128.0, 2);
  const double sigma = severity_parameter(CorruptionKind::kGaussianNoise).values[0];
  // Rounding to integers adds 1/12 of variance.
  EXPECT_NEAR(std::sqrt(sq / img.size()), std::sqrt(sigma * sigma + 1.0 / 12.0), 0.05 * sigma);
}

TEST(Corruptions, ImpulseFractionMatchesTable) {
  // Values in [1, 254] make every salt or pepper hit visible.
  const SeverityParameter& sp = severity_parameter(CorruptionKind::kImpulseNoise);
  for (int sev = 1; sev <= kMaxSeverity; ++sev) {
    const Image img = random_image(10 + sev, 1, 254);
    const Image out = apply(img, Corruption{CorruptionKind::kImpulseNoise, sev, 123, std::nullopt});
    std::size_t altered = 0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      if (out[i] != img[i]) {
        ++altered;
        EXPECT_TRUE(out[i] == 0 || out[i] == 255);
      }
    }
    EXPECT_NEAR(static_cast<double>(altered) / img.size(), sp.values[sev - 1], 0.02) << "severity " << sev;
  }
}

TEST(Corruptions, ShotNoiseIsUnbiased) {
  const Image img = make_image(64, 64, 100);
  const Image out = apply(img, Corruption{CorruptionKind::kShotNoise, 3, 8, std::nullopt});
  double sum = 0.0;
  for (auto v : out.data()) sum += v;
  EXPECT_NEAR(sum / out.size(), 100.0, 2.0);
}

TEST(Corruptions, RandomZeroEdges) {
  const Image img = random_image(11, 1, 255);
  EXPECT_EQ(random_zero(img, 0.0, 1), img);
  const Image zero = random_zero(img, 1.0, 1);
  for (auto v : zero.data()) EXPECT_EQ(v, 0);
  EXPECT_THROW(random_zero(img, -0.1, 1), std::invalid_argument);
  EXPECT_THROW(random_zero(img, 1.1, 1), std::invalid_argument);
  EXPECT_THROW(random_zero(img, std::numeric_limits<double>::quiet_NaN(), 1), std::invalid_argument);
}

TEST(Corruptions, RandomZeroCountWithinBinomialInterval) {
  // n = 1024, p = 0.3: mean 307.2, sd 14.66; 99% two-sided z = 2.576.
  const double mean = 307.2, sd = std::sqrt(1024 * 0.3 * 0.7);
  const Image img = random_image(12, 1, 255);
  int inside = 0;
  const int trials = 200;
  for (int s = 0; s < trials; ++s) {
    const Image out = random_zero(img, 0.3, static_cast<std::uint64_t>(s));
    int zeroed = 0;
    for (std::size_t p = 0; p < 1024; ++p) {
      const bool z0 = out[3 * p] == 0, z1 = out[3 * p + 1] == 0, z2 = out[3 * p + 2] == 0;
      EXPECT_EQ(z0, z1);
      EXPECT_EQ(z1, z2);
      if (!z0) {
        ASSERT_EQ(out[3 * p], img[3 * p]);
      }
      zeroed += z0;
    }
    if (s == 0) {
      EXPECT_NEAR(zeroed, mean, 2.576 * sd);
    }
    inside += std::fabs(zeroed - mean) <= 2.576 * sd;
  }
  // Across many seeds roughly 99% land inside; 95% is a safe floor.
  EXPECT_GE(inside, trials * 95 / 100);
}

TEST(Corruptions, CorruptSetPreservesLabelsAndMatchesApply) {
  LabeledImageSet set(32, 32);
  for (int i = 0; i < 6; ++i) set.push_back(random_image(20 + i), i % 3, 500 + i);
  const Corruption c{CorruptionKind::kElasticTransform, 4, 1234, std::nullopt};
  const LabeledImageSet out = corrupt_set(set, c);
  EXPECT_EQ(out, corrupt_set(set, c));
  EXPECT_EQ(out.labels(), set.labels());
  EXPECT_EQ(out.ids(), set.ids());
  EXPECT_EQ(out.provenance(), c.tag());
  for (std::size_t i = 0; i < set.size(); ++i) {
    Corruption ci = c;
    ci.seed = c.seed ^ i;
    EXPECT_EQ(out.image(i), apply(set.image(i), ci));
  }
  // Per-image seeds do not depend on the rest of the set.
  const std::size_t one[] = {0};
  EXPECT_EQ(corrupt_set(set.subset(one), c).image(0), out.image(0));
  EXPECT_TRUE(corrupt_set(LabeledImageSet(32, 32), c).empty());
}

TEST(Corruptions, SeverityTableCsv) {
  const std::string csv = severity_table_csv();
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "kind,severity,parameter,value");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 71);
  EXPECT_NE(csv.find("gaussian-noise,1,sigma,8\n"), std::string::npos);
}

TEST(Corruptions, PixelateFactorOneIsIdentity) {
  const Image img = random_image(13);
  EXPECT_EQ(apply(img, Corruption{CorruptionKind::kPixelate, 3, 0, 1.0}), img);
  const Image blocky = apply(img, Corruption{CorruptionKind::kPixelate, 1, 0, 0.5});
  // 16x16 blocks of 2x2 identical pixels.
  for (std::size_t y = 0; y < 32; y += 2)
    for (std::size_t x = 0; x < 32; x += 2)
      for (std::size_t c = 0; c < 3; ++c) {
        const auto v = blocky[(y * 32 + x) * 3 + c];
        EXPECT_EQ(blocky[(y * 32 + x + 1) * 3 + c], v);
        EXPECT_EQ(blocky[((y + 1) * 32 + x) * 3 + c], v);
      }
}

TEST(Corruptions, ContrastPullsTowardChannelMean) {
  const Image img = random_image(14);
  const Image out = apply(img, Corruption{CorruptionKind::kContrast, 5, 0, std::nullopt});
  auto spread = [](const Image& im) {
    int lo = 255, hi = 0;
    for (auto v : im.data()) {
      lo = std::min<int>(lo, v);
      hi = std::max<int>(hi, v);
    }
    return hi - lo;
  };
  EXPECT_LT(spread(out), spread(img) / 2);
}

TEST(Corruptions, BrightnessNeverDarkens) {
  const Image img = random_image(15);
  const Image out = apply(img, Corruption{CorruptionKind::kBrightness, 3, 0, std::nullopt});
  double before = 0, after = 0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    before += img[i];
    after += out[i];
  }
  EXPECT_GT(after, before);
}

TEST(Corruptions, TagFormat) {
  EXPECT_EQ((Corruption{CorruptionKind::kContrast, 3, 0, std::nullopt}).tag(), "contrast/3/seed=0");
  EXPECT_EQ((Corruption{CorruptionKind::kPixelate, 2, 5, 1.0}).tag(), "pixelate/2/seed=5/factor=1");
}

}  // namespace
}  // namespace stnet
