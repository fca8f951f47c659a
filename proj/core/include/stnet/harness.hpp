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
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "stnet/arch.hpp"
#include "stnet/corruptions.hpp"
#include "stnet/graph.hpp"
#include "stnet/image.hpp"
#include "stnet/optim.hpp"
#include "stnet/reports.hpp"
#include "stnet/slicer.hpp"
#include "stnet/zoo.hpp"

namespace stnet {

class LeakageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::size_t epochs = 15;
  std::size_t batch_size = 64;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  std::string precision = "f32";  // training always runs in 32-bit
  SliceSpec slice = make_spec(1);
};

void check_train_config(const TrainConfig& config);

struct TrainResult {
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  std::vector<double> step_loss;
  std::size_t steps = 0;
};

// Ids that must never reach the training stream; train() throws
// LeakageError before any step if `data` contains one.
using IdSet = std::unordered_set<std::uint64_t>;

// Epoch e visits samples in a Fisher-Yates order drawn from
// Rng(mix_seed(seed, e)); each batch is sliced and scaled by 1/255.
TrainResult train(Graph<float>& graph, const LabeledImageSet& data, const TrainConfig& config,
                  const IdSet* forbidden_ids = nullptr);

struct EvalCounts {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return static_cast<double>(correct) / static_cast<double>(total); }
};

// First-max argmax against labels, in inference mode.
EvalCounts evaluate_counts(Graph<float>& graph, const LabeledImageSet& data,
                           const SliceSpec& spec, std::size_t batch_size = 250);
double evaluate(Graph<float>& graph, const LabeledImageSet& data, const SliceSpec& spec);

std::vector<int> predict(Graph<float>& graph, const LabeledImageSet& data, const SliceSpec& spec,
                         std::size_t batch_size = 250);

struct SuiteConfig {
  std::vector<CorruptionKind> kinds;
  std::vector<int> severities{3};
  std::uint64_t seed = 0;
};

// Seed of the (kind, severity) cell of a suite.
std::uint64_t suite_cell_seed(std::uint64_t suite_seed, CorruptionKind kind, int severity);

EvalReport eval_corruption_suite(Graph<float>& graph, const std::string& model,
                                 const LabeledImageSet& clean_test, const SuiteConfig& suite,
                                 const SliceSpec& spec, const std::string& protocol = "no-aug");

// accuracy_aug - accuracy_noaug per corruption row. With equal n on both
// sides the difference is taken on integer counts. Throws ReportError when
// the row sets differ.
BoostReport augmentation_boost(const EvalReport& aug, const EvalReport& noaug);

// Throws LeakageError naming the first shared id.
void check_no_leakage(const IdSet& training_ids, const LabeledImageSet& held_out);
IdSet id_set(const LabeledImageSet& set);

struct ProtocolResult {
  EvalReport noaug;
  EvalReport aug;
  BoostReport boost;
  std::size_t aug_train_size = 0;
};

// No-aug model trained on `train`; aug model trained on `train` plus the
// to_train half of every corrupted suite cell. The split is drawn once
// over test indices and reused by every cell, so both models are scored
// on the same to_test halves and no source image appears on both sides.
ProtocolResult run_augmentation_protocol(const ArchDescription& desc, const LabeledImageSet& train,
                                         const LabeledImageSet& clean_test,
                                         const SuiteConfig& suite, const TrainConfig& config,
                                         double fraction = 0.5, std::uint64_t split_seed = 0);

enum class SearchCriterion { kAtLeast, kStrictlyGreater };

struct ScaleCandidate {
  double scale = 0.0;
  std::uint64_t stnet_flops = 0;
  bool admissible = false;
  std::optional<double> mean_accuracy;
};

struct ScaleSearchResult {
  std::optional<StnetName> chosen;
  std::uint64_t base_flops = 0;
  std::optional<double> base_mean_accuracy;
  std::vector<ScaleCandidate> candidates;
  std::size_t training_runs = 0;
};

// Trains and scores a description, returning its mean suite accuracy.
using ModelScorer = std::function<double(const ArchDescription&)>;

// FLOPs admissibility is decided before any training; the base model is
// scored lazily, only once an admissible candidate exists.
ScaleSearchResult scale_search(const ArchDescription& base, std::size_t streams,
                               std::span<const double> scales, const ModelScorer& score,
                               SearchCriterion criterion = SearchCriterion::kAtLeast);

struct DeskConfig {
  std::size_t train_size = 2000;
  std::size_t test_size = 1000;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<CorruptionKind> kinds{CorruptionKind::kGaussianNoise, CorruptionKind::kImpulseNoise,
                                    CorruptionKind::kDefocusBlur, CorruptionKind::kContrast,
                                    CorruptionKind::kPixelate};
  int severity = 3;
  std::string stnet = "STNet3_3_MiniVGG";
  TrainConfig train;
};

struct DeskSeedResult {
  std::uint64_t seed = 0;
  EvalReport base;
  EvalReport stnet;
};

struct DeskResult {
  std::vector<DeskSeedResult> seeds;
  std::size_t seeds_stnet_not_worse = 0;  // mean corrupted acc >= base
  double max_clean_gap = 0.0;             // |clean_stnet - clean_base|
  bool trend_holds = false;               // >= 2/3 of seeds and gap < 0.05
};

DeskResult run_desk_experiment(const LabeledImageSet& train_pool, const LabeledImageSet& test_pool,
                               const DeskConfig& config);

}  // namespace stnet
