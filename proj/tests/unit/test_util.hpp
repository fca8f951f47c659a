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

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stnet/graph.hpp"
#include "stnet/layers.hpp"
#include "stnet/rng.hpp"
#include "stnet/tensor.hpp"

namespace stnet::testing {

template <typename T>
Tensor<T> random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor<T> t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
void randomize_parameters(Graph<T>& graph, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  for (Parameter<T>* p : graph.parameters()) {
    if (!p->trainable) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      p->value[i] = static_cast<T>(rng.uniform(-scale, scale));
    }
  }
}

// input -> layers... -> softmax, with each layer consuming the previous.
template <typename T>
Graph<T> chain(const Shape& sample, std::vector<std::unique_ptr<Layer<T>>> layers) {
  Graph<T> g;
  std::size_t cur = g.add_input("input", sample, 0);
  int i = 0;
  for (auto& layer : layers) {
    const bool head = layer->kind() == LayerKind::kSoftmax;
    cur = g.add_node("n" + std::to_string(i++), std::move(layer), {cur}, head ? -1 : 0);
  }
  g.set_output(cur);
  g.validate();
  return g;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

}  // namespace stnet::testing
