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

// End-to-end throughput: slicing, corruption and a training step.

#include <benchmark/benchmark.h>

#include <vector>

#include "stnet/corruptions.hpp"
#include "stnet/datasets.hpp"
#include "stnet/graph.hpp"
#include "stnet/harness.hpp"
#include "stnet/slicer.hpp"
#include "stnet/zoo.hpp"

namespace {

using namespace stnet;

void BM_SliceBatch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const LabeledImageSet set = synth_shapes(64, 10, 1);
  const SliceSpec spec = make_spec(n);
  std::vector<Tensor<float>> out;
  for (auto _ : state) {
    slice_batch(set.all_pixels(), set.size(), 32, 32, spec, 1.0f / 255.0f, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * set.size()));
}
BENCHMARK(BM_SliceBatch)->Arg(1)->Arg(3)->Arg(5)->Arg(8);

void BM_Corruption(benchmark::State& state) {
  const auto kind = all_corruption_kinds()[static_cast<std::size_t>(state.range(0))];
  const LabeledImageSet set = synth_shapes(10, 10, 2);
  const Image img = set.image(0);
  const Corruption c{kind, 3, 7, std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(apply(img, c).raw());
  state.SetLabel(std::string(corruption_name(kind)));
}
BENCHMARK(BM_Corruption)->DenseRange(0, 13);

// One SGD step on a batch of 32 for a base and an equal-budget STNet.
void BM_TrainStep(benchmark::State& state) {
  const char* names[] = {"MiniVGG", "STNet3_3_MiniVGG"};
  const ArchDescription desc = model_desc(names[state.range(0)], 10);
  const LabeledImageSet set = synth_shapes(32, 10, 3);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 32;
  cfg.slice = make_spec(desc.streams);
  Graph<float> g = compile<float>(desc, 1);
  for (auto _ : state) benchmark::DoNotOptimize(train(g, set, cfg, nullptr).steps);
  state.SetLabel(names[state.range(0)]);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * set.size()));
}
BENCHMARK(BM_TrainStep)->DenseRange(0, 1)->Unit(benchmark::kMillisecond);

}  // namespace
