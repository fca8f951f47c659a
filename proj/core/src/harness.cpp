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

#include "stnet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stnet/analyzer.hpp"
#include "stnet/datasets.hpp"
#include "stnet/loss.hpp"
#include "stnet/rng.hpp"

namespace stnet {

namespace {

constexpr float kInputScale = 1.0f / 255.0f;

void check_arity(const Graph<float>& graph, const SliceSpec& spec) {
  if (graph.num_inputs() != spec.num_slices) {
    throw std::invalid_argument("graph has " + std::to_string(graph.num_inputs()) +
                                " inputs but the slice spec makes " +
                                std::to_string(spec.num_slices) + " slices");
  }
}

void check_geometry(const Graph<float>& graph, const LabeledImageSet& data) {
  const Shape expect{data.height(), data.width(), data.channels()};
  for (std::size_t id : graph.input_ids()) {
    if (graph.node(id).sample_shape != expect) {
      throw std::invalid_argument("graph input " + graph.node(id).name + " expects " +
                                  shape_to_string(graph.node(id).sample_shape) +
                                  ", data is " + shape_to_string(expect));
    }
  }
}

// Copies the images at order[begin, end) into one packed buffer.
void gather(const LabeledImageSet& data, std::span<const std::size_t> order,
            std::vector<std::uint8_t>& pixels, std::vector<int>& labels) {
  const std::size_t per = data.image_size();
  pixels.resize(order.size() * per);
  labels.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto px = data.pixels(order[i]);
    std::copy(px.begin(), px.end(), pixels.begin() + static_cast<std::ptrdiff_t>(i * per));
    labels[i] = data.label(order[i]);
  }
}

std::size_t argmax_row(const float* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < n; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

}  // namespace

void check_train_config(const TrainConfig& config) {
  if (config.epochs == 0) throw std::invalid_argument("epochs must be at least 1");
  if (config.batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  if (config.precision != "f32") {
    throw std::invalid_argument("training precision must be f32, got " + config.precision);
  }
  check_spec(config.slice);
}

TrainResult train(Graph<float>& graph, const LabeledImageSet& data, const TrainConfig& config,
                  const IdSet* forbidden_ids) {
  check_train_config(config);
  check_arity(graph, config.slice);
  if (data.empty()) throw std::invalid_argument("training data is empty");
  check_geometry(graph, data);
  if (forbidden_ids != nullptr) {
    for (std::uint64_t id : data.ids()) {
      if (forbidden_ids->count(id) != 0) {
        throw LeakageError("held-out image id " + std::to_string(id) + " is in the training set");
      }
    }
  }
  Optimizer optimizer(config.optimizer);
  TrainResult result;
  std::vector<std::size_t> order(data.size());
  std::vector<std::uint8_t> pixels;
  std::vector<int> labels;
  std::vector<Tensor<float>> inputs;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(config.seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      gather(data, std::span(order).subspan(start, count), pixels, labels);
      slice_batch(pixels, count, data.height(), data.width(), config.slice, kInputScale, inputs);
      const Tensor<float>& probs = graph.forward(inputs, true);
      const double loss = cross_entropy(probs, std::span<const int>(labels));
      graph.backward(labels);
      optimizer.step(graph);
      result.step_loss.push_back(loss);
      epoch_sum += loss;
      ++batches;
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
  }
  result.steps = optimizer.steps();
  return result;
}

std::vector<int> predict(Graph<float>& graph, const LabeledImageSet& data, const SliceSpec& spec,
                         std::size_t batch_size) {
  check_arity(graph, spec);
  if (data.empty()) throw std::invalid_argument("evaluation data is empty");
  check_geometry(graph, data);
  std::vector<int> out;
  out.reserve(data.size());
  std::vector<Tensor<float>> inputs;
  const auto all = data.all_pixels();
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, data.size() - start);
    slice_batch(all.subspan(start * data.image_size(), count * data.image_size()), count,
                data.height(), data.width(), spec, kInputScale, inputs);
    const Tensor<float>& probs = graph.forward(inputs, false);
    const std::size_t classes = probs.dim(1);
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(static_cast<int>(argmax_row(probs.raw() + i * classes, classes)));
    }
  }
  return out;
}

EvalCounts evaluate_counts(Graph<float>& graph, const LabeledImageSet& data, const SliceSpec& spec,
                           std::size_t batch_size) {
  const std::vector<int> pred = predict(graph, data, spec, batch_size);
  EvalCounts counts;
  counts.total = data.size();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == data.label(i)) ++counts.correct;
  }
  return counts;
}

double evaluate(Graph<float>& graph, const LabeledImageSet& data, const SliceSpec& spec) {
  return evaluate_counts(graph, data, spec).accuracy();
}

std::uint64_t suite_cell_seed(std::uint64_t suite_seed, CorruptionKind kind, int severity) {
  return mix_seed(suite_seed, static_cast<std::uint64_t>(kind) * 16 + static_cast<std::uint64_t>(severity));
}

EvalReport eval_corruption_suite(Graph<float>& graph, const std::string& model,
                                 const LabeledImageSet& clean_test, const SuiteConfig& suite,
                                 const SliceSpec& spec, const std::string& protocol) {
  EvalReport report{model, protocol, {}};
  const EvalCounts clean = evaluate_counts(graph, clean_test, spec);
  report.rows.push_back({"clean", 0, clean.total, clean.correct});
  for (CorruptionKind kind : suite.kinds) {
    for (int severity : suite.severities) {
      const Corruption c{kind, severity, suite_cell_seed(suite.seed, kind, severity), std::nullopt};
      const EvalCounts counts = evaluate_counts(graph, corrupt_set(clean_test, c), spec);
      report.rows.push_back({std::string(corruption_name(kind)), severity, counts.total, counts.correct});
    }
  }
  return report;
}

BoostReport augmentation_boost(const EvalReport& aug, const EvalReport& noaug) {
  auto corrupted = [](const EvalReport& r) {
    std::vector<const EvalRow*> out;
    for (const EvalRow& row : r.rows) {
      if (row.kind != "clean") out.push_back(&row);
    }
    return out;
  };
  const auto a = corrupted(aug), b = corrupted(noaug);
  if (a.size() != b.size()) {
    throw ReportError("aug report has " + std::to_string(a.size()) + " corruption rows, no-aug has " +
                      std::to_string(b.size()));
  }
  BoostReport out{aug.model, {}};
  for (const EvalRow* row : a) {
    const EvalRow* other = noaug.find(row->kind, row->severity);
    if (other == nullptr) {
      throw ReportError("no-aug report lacks row " + row->kind + "/" + std::to_string(row->severity));
    }
    double delta;
    if (row->n == other->n) {
      delta = (static_cast<double>(row->correct) - static_cast<double>(other->correct)) /
              static_cast<double>(row->n);
    } else {
      delta = row->accuracy() - other->accuracy();
    }
    out.rows.push_back({row->kind, row->severity, delta});
  }
  return out;
}

IdSet id_set(const LabeledImageSet& set) { return IdSet(set.ids().begin(), set.ids().end()); }

void check_no_leakage(const IdSet& training_ids, const LabeledImageSet& held_out) {
  for (std::uint64_t id : held_out.ids()) {
    if (training_ids.count(id) != 0) {
      throw LeakageError("image id " + std::to_string(id) + " is in both training and test data");
    }
  }
}

ProtocolResult run_augmentation_protocol(const ArchDescription& desc, const LabeledImageSet& train_set,
                                         const LabeledImageSet& clean_test,
                                         const SuiteConfig& suite, const TrainConfig& config,
                                         double fraction, std::uint64_t split_seed) {
  std::vector<std::size_t> train_idx, test_idx;
  split_indices(clean_test.labels(), fraction, split_seed, true, train_idx, test_idx);

  LabeledImageSet aug_train = train_set;
  std::vector<std::pair<EvalRow, LabeledImageSet>> cells;
  for (CorruptionKind kind : suite.kinds) {
    for (int severity : suite.severities) {
      const Corruption c{kind, severity, suite_cell_seed(suite.seed, kind, severity), std::nullopt};
      const LabeledImageSet corrupted = corrupt_set(clean_test, c);
      aug_train.append(corrupted.subset(train_idx));
      cells.push_back({{std::string(corruption_name(kind)), severity, 0, 0}, corrupted.subset(test_idx)});
    }
  }
  const LabeledImageSet clean_half = clean_test.subset(test_idx);
  const IdSet forbidden = id_set(clean_half);

  TrainConfig cfg = config;
  cfg.slice = make_spec(desc.streams, config.slice.mode);
  auto run = [&](const LabeledImageSet& data, const std::string& protocol) {
    Graph<float> graph = compile<float>(desc, cfg.seed);
    train(graph, data, cfg, &forbidden);
    const IdSet seen = id_set(data);
    EvalReport report{desc.name, protocol, {}};
    check_no_leakage(seen, clean_half);
    const EvalCounts clean = evaluate_counts(graph, clean_half, cfg.slice);
    report.rows.push_back({"clean", 0, clean.total, clean.correct});
    for (const auto& [row, held_out] : cells) {
      check_no_leakage(seen, held_out);
      const EvalCounts counts = evaluate_counts(graph, held_out, cfg.slice);
      report.rows.push_back({row.kind, row.severity, counts.total, counts.correct});
    }
    return report;
  };
  ProtocolResult result;
  result.noaug = run(train_set, "no-aug");
  result.aug = run(aug_train, "aug");
  result.boost = augmentation_boost(result.aug, result.noaug);
  result.aug_train_size = aug_train.size();
  return result;
}

ScaleSearchResult scale_search(const ArchDescription& base, std::size_t streams,
                               std::span<const double> scales, const ModelScorer& score,
                               SearchCriterion criterion) {
  if (scales.empty()) throw std::invalid_argument("scale ladder is empty");
  for (double s : scales) {
    if (!(s >= 1.0)) throw std::invalid_argument("scales must be >= 1");
  }
  ScaleSearchResult result;
  result.base_flops = count_flops(base);
  for (double scale : scales) {
    ScaleCandidate cand;
    cand.scale = scale;
    const ArchDescription desc = stnet_desc(base, streams, scale, base.classes);
    cand.stnet_flops = count_flops(desc);
    cand.admissible = cand.stnet_flops < result.base_flops;
    if (cand.admissible) {
      if (!result.base_mean_accuracy) {
        result.base_mean_accuracy = score(base);
        ++result.training_runs;
      }
      cand.mean_accuracy = score(desc);
      ++result.training_runs;
      const bool ok = criterion == SearchCriterion::kAtLeast
                          ? *cand.mean_accuracy >= *result.base_mean_accuracy
                          : *cand.mean_accuracy > *result.base_mean_accuracy;
      result.candidates.push_back(cand);
      if (ok) {
        result.chosen = StnetName{streams, scale, base.family};
        break;
      }
      continue;
    }
    result.candidates.push_back(cand);
  }
  return result;
}

DeskResult run_desk_experiment(const LabeledImageSet& train_pool, const LabeledImageSet& test_pool,
                               const DeskConfig& config) {
  const LabeledImageSet train_set =
      config.train_size < train_pool.size() ? stratified_subset(train_pool, config.train_size, 0)
                                            : train_pool;
  const LabeledImageSet test_set =
      config.test_size < test_pool.size() ? stratified_subset(test_pool, config.test_size, 0)
                                          : test_pool;
  check_no_leakage(id_set(train_set), test_set);
  const IdSet forbidden = id_set(test_set);
  const std::size_t classes = train_set.num_classes_seen();
  const ArchDescription stnet = model_desc(config.stnet, classes);
  const ArchDescription base = base_desc(stnet.family, classes);

  DeskResult result;
  for (std::uint64_t seed : config.seeds) {
    DeskSeedResult row;
    row.seed = seed;
    SuiteConfig suite{config.kinds, {config.severity}, seed};
    for (const ArchDescription* desc : {&base, &stnet}) {
      TrainConfig cfg = config.train;
      cfg.seed = seed;
      cfg.slice = make_spec(desc->streams, config.train.slice.mode);
      Graph<float> graph = compile<float>(*desc, seed);
      train(graph, train_set, cfg, &forbidden);
      EvalReport report = eval_corruption_suite(graph, desc->name, test_set, suite, cfg.slice);
      (desc == &base ? row.base : row.stnet) = std::move(report);
    }
    if (row.stnet.mean_corrupted_accuracy() >= row.base.mean_corrupted_accuracy()) {
      ++result.seeds_stnet_not_worse;
    }
    result.max_clean_gap = std::max(
        result.max_clean_gap, std::fabs(row.stnet.clean_accuracy() - row.base.clean_accuracy()));
    result.seeds.push_back(std::move(row));
  }
  const std::size_t n = result.seeds.size();
  result.trend_holds = n > 0 && 3 * result.seeds_stnet_not_worse >= 2 * n && result.max_clean_gap < 0.05;
  return result;
}

}  // namespace stnet
