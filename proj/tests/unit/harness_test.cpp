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

#include <cmath>
#include <vector>

#include "stnet/analyzer.hpp"
#include "stnet/checkpoint.hpp"
#include "stnet/datasets.hpp"
#include "stnet/harness.hpp"
#include "test_util.hpp"

namespace stnet {
namespace {

constexpr InputSpec kSmall{16, 16, 3};

ArchDescription small_minivgg(std::size_t classes = 10) { return minivgg_desc({8, 8, 16, 16}, kSmall, classes); }

TrainConfig quick_config(std::size_t epochs = 1) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 16;
  cfg.seed = 3;
  return cfg;
}

std::vector<Tensor<float>> parameter_values(Graph<float>& g) {
  std::vector<Tensor<float>> v;
  for (auto* p : g.parameters()) v.push_back(p->value);
  return v;
}

TEST(Harness, TrainConfigValidation) {
  TrainConfig cfg = quick_config();
  EXPECT_NO_THROW(check_train_config(cfg));
  cfg.epochs = 0;
  EXPECT_THROW(check_train_config(cfg), std::invalid_argument);
  cfg = quick_config();
  cfg.batch_size = 0;
  EXPECT_THROW(check_train_config(cfg), std::invalid_argument);
  cfg = quick_config();
  cfg.precision = "f16";
  EXPECT_THROW(check_train_config(cfg), std::invalid_argument);
}

TEST(Harness, ZeroLearningRateLeavesParametersUnchanged) {
  const LabeledImageSet data = synth_shapes(64, 10, 1, 0, 16);
  Graph<float> g = compile<float>(small_minivgg(), 2);
  const auto before = parameter_values(g);
  TrainConfig cfg = quick_config(3);
  cfg.optimizer.lr = 0.0;
  const TrainResult r = train(g, data, cfg);
  EXPECT_EQ(r.steps, 12u);
  EXPECT_EQ(r.epoch_loss.size(), 3u);
  EXPECT_EQ(parameter_values(g), before);
}

TEST(Harness, MemorizesSingleSample) {
  const LabeledImageSet one = synth_shapes(1, 1, 4);
  Graph<float> g = compile<float>(minivgg_desc(), 5);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 1;
  cfg.seed = 0;
  const TrainResult r = train(g, one, cfg);
  EXPECT_EQ(r.steps, 200u);
  EXPECT_LT(r.step_loss.back(), 0.01);
}

TEST(Harness, TrainingIsBitReproducible) {
  const LabeledImageSet data = synth_shapes(48, 10, 7, 0, 16);
  const ArchDescription d = stnet_desc(small_minivgg(), 3, 3.0, 10);
  auto run = [&] {
    Graph<float> g = compile<float>(d, 8);
    TrainConfig cfg = quick_config(2);
    cfg.slice = make_spec(3);
    train(g, data, cfg);
    return encode_checkpoint(g);
  };
  EXPECT_EQ(run(), run());
}

TEST(Harness, RejectsArityAndGeometryMismatchBeforeAnyStep) {
  const LabeledImageSet data = synth_shapes(20, 10, 1, 0, 16);
  Graph<float> g = compile<float>(stnet_desc(small_minivgg(), 3, 3.0, 10), 1);
  const auto before = parameter_values(g);
  TrainConfig cfg = quick_config();
  EXPECT_THROW(train(g, data, cfg), std::invalid_argument);  // one slice, three streams
  cfg.slice = make_spec(3);
  EXPECT_THROW(train(g, synth_shapes(20, 10, 1), cfg), std::invalid_argument);  // 32x32 into 16x16
  EXPECT_THROW(train(g, LabeledImageSet(16, 16), cfg), std::invalid_argument);
  EXPECT_EQ(parameter_values(g), before);
}

TEST(Harness, ForbiddenIdsAreRefused) {
  const LabeledImageSet data = synth_shapes(20, 10, 1, 0, 16);
  Graph<float> g = compile<float>(small_minivgg(), 1);
  const auto before = parameter_values(g);
  const IdSet forbidden{5};
  EXPECT_THROW(train(g, data, quick_config(), &forbidden), LeakageError);
  EXPECT_EQ(parameter_values(g), before);
  EXPECT_THROW(check_no_leakage(id_set(data), data), LeakageError);
  EXPECT_NO_THROW(check_no_leakage(id_set(data), synth_shapes(20, 10, 1, 1000, 16)));
}

// Input (1,1,3) -> flatten -> softmax: the predicted class is the brightest
// channel.
Graph<float> channel_argmax() {
  std::vector<std::unique_ptr<Layer<float>>> layers;
  layers.push_back(make_flatten<float>());
  layers.push_back(make_softmax<float>());
  return testing::chain<float>({1, 1, 3}, std::move(layers));
}

LabeledImageSet pixels(const std::vector<std::array<std::uint8_t, 3>>& px, const std::vector<int>& labels) {
  LabeledImageSet s(1, 1);
  for (std::size_t i = 0; i < px.size(); ++i) s.push_back(std::span<const std::uint8_t>(px[i]), labels[i], i);
  return s;
}

TEST(Harness, EvaluateCountsMatches) {
  Graph<float> g = channel_argmax();
  const LabeledImageSet three = pixels({{{200, 10, 10}}, {{10, 200, 10}}, {{10, 10, 200}}}, {0, 1, 0});
  const SliceSpec one = make_spec(1);
  const EvalCounts c = evaluate_counts(g, three, one);
  EXPECT_EQ(c.correct, 2u);
  EXPECT_EQ(c.total, 3u);
  EXPECT_DOUBLE_EQ(evaluate(g, three, one), 2.0 / 3.0);
  EXPECT_EQ(predict(g, three, one, 2), (std::vector<int>{0, 1, 2}));
  const LabeledImageSet zeros = pixels({{{90, 1, 2}}, {{250, 0, 0}}, {{30, 29, 28}}}, {0, 0, 0});
  EXPECT_DOUBLE_EQ(evaluate(g, zeros, one), 1.0);
  EXPECT_EQ(evaluate(g, three, one), evaluate(g, three, one));
  EXPECT_THROW(evaluate(g, LabeledImageSet(1, 1), one), std::invalid_argument);
}

class TrainedSmallModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    graph_ = new Graph<float>(compile<float>(small_minivgg(), 1));
    train(*graph_, synth_shapes(200, 10, 1, 0, 16), quick_config(2));
    test_ = new LabeledImageSet(synth_shapes(60, 10, 2, kCifarTestIdBase, 16));
  }
  static void TearDownTestSuite() {
    delete graph_;
    delete test_;
  }
  static Graph<float>* graph_;
  static LabeledImageSet* test_;
};

Graph<float>* TrainedSmallModel::graph_ = nullptr;
LabeledImageSet* TrainedSmallModel::test_ = nullptr;

TEST_F(TrainedSmallModel, EmptySuiteGivesCleanRowOnly) {
  const EvalReport r = eval_corruption_suite(*graph_, "m", *test_, SuiteConfig{}, make_spec(1));
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].kind, "clean");
  EXPECT_EQ(r.rows[0].n, 60u);
  EXPECT_EQ(r.protocol, "no-aug");
}

TEST_F(TrainedSmallModel, SuiteIsReproducibleAndShaped) {
  SuiteConfig suite{{CorruptionKind::kGaussianNoise, CorruptionKind::kContrast, CorruptionKind::kPixelate},
                    {1, 3},
                    11};
  const EvalReport a = eval_corruption_suite(*graph_, "m", *test_, suite, make_spec(1));
  const EvalReport b = eval_corruption_suite(*graph_, "m", *test_, suite, make_spec(1));
  ASSERT_EQ(a.rows.size(), 7u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].kind, b.rows[i].kind);
    EXPECT_EQ(a.rows[i].severity, b.rows[i].severity);
    EXPECT_EQ(a.rows[i].correct, b.rows[i].correct);
  }
  EXPECT_NE(a.find("pixelate", 3), nullptr);
  // The suite's cells are exactly corrupt_set with the derived seed.
  const Corruption c{CorruptionKind::kGaussianNoise, 3, suite_cell_seed(11, CorruptionKind::kGaussianNoise, 3),
                     std::nullopt};
  EXPECT_EQ(a.find("gaussian-noise", 3)->correct,
            evaluate_counts(*graph_, corrupt_set(*test_, c), make_spec(1)).correct);
  EXPECT_NE(suite_cell_seed(11, CorruptionKind::kGaussianNoise, 3),
            suite_cell_seed(11, CorruptionKind::kGaussianNoise, 4));
}

TEST_F(TrainedSmallModel, IdentityStrengthMatchesClean) {
  const double clean = evaluate(*graph_, *test_, make_spec(1));
  for (CorruptionKind k : all_corruption_kinds()) {
    const Corruption c{k, 1, 4, severity_parameter(k).null_value};
    EXPECT_EQ(evaluate(*graph_, corrupt_set(*test_, c), make_spec(1)), clean) << corruption_name(k);
  }
}

TEST(Harness, AugmentationProtocolNeverLeaks) {
  const LabeledImageSet train_set = synth_shapes(120, 10, 1, 0, 16);
  const LabeledImageSet test_set = synth_shapes(80, 10, 2, kCifarTestIdBase, 16);
  const SuiteConfig suite{{CorruptionKind::kImpulseNoise, CorruptionKind::kDefocusBlur}, {3}, 5};
  const ProtocolResult r = run_augmentation_protocol(small_minivgg(), train_set, test_set, suite, quick_config(1));
  EXPECT_EQ(r.aug_train_size, 120u + 2 * 40);
  ASSERT_EQ(r.noaug.rows.size(), 3u);
  ASSERT_EQ(r.aug.rows.size(), 3u);
  EXPECT_EQ(r.noaug.protocol, "no-aug");
  EXPECT_EQ(r.aug.protocol, "aug");
  for (const auto& row : r.aug.rows) EXPECT_EQ(row.n, 40u);
  ASSERT_EQ(r.boost.rows.size(), 2u);
  for (const auto& b : r.boost.rows) {
    EXPECT_DOUBLE_EQ(b.boost + r.noaug.find(b.kind, b.severity)->accuracy(),
                     r.aug.find(b.kind, b.severity)->accuracy());
  }
  // Overlapping train and test ids are caught.
  EXPECT_THROW(run_augmentation_protocol(small_minivgg(), train_set, synth_shapes(80, 10, 2, 0, 16), suite,
                                         quick_config(1)),
               LeakageError);
}

TEST(ScaleSearch, FirstScaleAcceptedStopsEarly) {
  const ArchDescription base = minivgg_desc();
  int calls = 0;
  const double ladder[] = {3.0, 2.0};
  const auto r = scale_search(base, 3, ladder, [&](const ArchDescription&) {
    ++calls;
    return 0.5;
  });
  ASSERT_TRUE(r.chosen.has_value());
  EXPECT_EQ(*r.chosen, (StnetName{3, 3.0, BaseFamily::kMiniVGG}));
  EXPECT_EQ(r.training_runs, 2u);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(r.candidates.size(), 1u);
}

TEST(ScaleSearch, InadmissibleCandidatesAreNeverTrained) {
  const ArchDescription base = vgg16_desc();
  const double ladder[] = {2.0, 1.5, 1.0};
  int calls = 0;
  const auto r = scale_search(base, 5, ladder, [&](const ArchDescription&) {
    ++calls;
    return 1.0;
  });
  EXPECT_FALSE(r.chosen.has_value());
  EXPECT_EQ(r.training_runs, 0u);
  EXPECT_EQ(calls, 0);
  EXPECT_FALSE(r.base_mean_accuracy.has_value());
  ASSERT_EQ(r.candidates.size(), 3u);
  for (const auto& c : r.candidates) {
    EXPECT_FALSE(c.admissible);
    EXPECT_GE(c.stnet_flops, r.base_flops);
  }
}

// Mocked scorer: the base scores 0.5 and a candidate only beats it at the
// listed winning scale.
ModelScorer mock(double winning_scale, std::vector<double>& trained) {
  return [winning_scale, &trained](const ArchDescription& d) {
    if (d.streams == 1) return 0.5;
    EXPECT_LT(count_flops(d), count_flops(base_desc(d.family)));
    trained.push_back(d.scale);
    return d.scale == winning_scale ? 0.5 : 0.4;
  };
}

TEST(ScaleSearch, PublishedVggLadderUnderFlopsConstraint) {
  // Under stnet-flops-v1 a 5-stream VGG16 STNet at scale 2 or 1.5 costs more
  // than VGG16 itself, so the constraint removes the last two rungs.
  const double ladder[] = {5.0, 4.0, 3.0, 2.0, 1.5};
  std::vector<double> trained;
  const auto r = scale_search(vgg16_desc(), 5, ladder, mock(1.5, trained));
  EXPECT_FALSE(r.chosen.has_value());
  EXPECT_EQ(trained, (std::vector<double>{5.0, 4.0, 3.0}));
  EXPECT_EQ(r.training_runs, 4u);
  ASSERT_EQ(r.candidates.size(), 5u);
  EXPECT_FALSE(r.candidates[3].admissible);
  EXPECT_FALSE(r.candidates[4].admissible);
}

TEST(ScaleSearch, FifthRungStopsAfterFourFailures) {
  const double ladder[] = {9.0, 8.0, 7.0, 6.0, 5.0};
  std::vector<double> trained;
  const auto r = scale_search(resnet50_desc(), 5, ladder, mock(5.0, trained));
  ASSERT_TRUE(r.chosen.has_value());
  EXPECT_EQ(format_stnet_name(*r.chosen), "STNet5_5_ResNet50");
  EXPECT_EQ(trained, (std::vector<double>{9.0, 8.0, 7.0, 6.0, 5.0}));
  EXPECT_EQ(r.training_runs, 6u);
}

TEST(ScaleSearch, StrictCriterionRejectsTies) {
  const double ladder[] = {3.0};
  auto tie = [](const ArchDescription&) { return 0.6; };
  EXPECT_TRUE(scale_search(minivgg_desc(), 3, ladder, tie, SearchCriterion::kAtLeast).chosen);
  EXPECT_FALSE(scale_search(minivgg_desc(), 3, ladder, tie, SearchCriterion::kStrictlyGreater).chosen);
}

TEST(ScaleSearch, RejectsBadLadders) {
  auto any = [](const ArchDescription&) { return 0.0; };
  EXPECT_THROW(scale_search(minivgg_desc(), 3, std::span<const double>(), any), std::invalid_argument);
  const double low[] = {3.0, 0.5};
  EXPECT_THROW(scale_search(minivgg_desc(), 3, low, any), std::invalid_argument);
}

TEST(Desk, TinyRunReportsTrendFields) {
  DeskConfig cfg;
  cfg.train_size = 100;
  cfg.test_size = 50;
  cfg.seeds = {0, 1};
  cfg.kinds = {CorruptionKind::kContrast};
  cfg.train = quick_config(1);
  const LabeledImageSet train_pool = synth_shapes(300, 10, 1);
  const LabeledImageSet test_pool = synth_shapes(100, 10, 2, kCifarTestIdBase);
  const DeskResult r = run_desk_experiment(train_pool, test_pool, cfg);
  ASSERT_EQ(r.seeds.size(), 2u);
  std::size_t not_worse = 0;
  double gap = 0.0;
  for (const auto& s : r.seeds) {
    EXPECT_EQ(s.base.model, "MiniVGG");
    EXPECT_EQ(s.stnet.model, "STNet3_3_MiniVGG");
    EXPECT_EQ(s.base.rows.size(), 2u);
    EXPECT_EQ(s.base.find("clean", 0)->n, 50u);
    not_worse += s.stnet.mean_corrupted_accuracy() >= s.base.mean_corrupted_accuracy();
    gap = std::max(gap, std::fabs(s.stnet.clean_accuracy() - s.base.clean_accuracy()));
  }
  EXPECT_EQ(r.seeds_stnet_not_worse, not_worse);
  EXPECT_DOUBLE_EQ(r.max_clean_gap, gap);
  EXPECT_EQ(r.trend_holds, 3 * not_worse >= 2 * r.seeds.size() && gap < 0.05);
  EXPECT_THROW(run_desk_experiment(train_pool, train_pool, cfg), LeakageError);
}

}  // namespace
}  // namespace stnet
