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

#include "stnet/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace stnet {

namespace {

template <typename T>
std::vector<Parameter<T>*> finite_trainables(Graph<T>& graph) {
  std::vector<Parameter<T>*> params = graph.trainable_parameters();
  for (Parameter<T>* p : params) {
    if (!p->grad.all_finite()) {
      const auto slash = p->name.rfind('/');
      throw GraphError(slash == std::string::npos ? p->name : p->name.substr(0, slash),
                       "non-finite gradient in " + p->name + "; step aborted");
    }
  }
  return params;
}

template <typename T>
void ensure_slot(Tensor<T>& slot, const Tensor<T>& like) {
  if (slot.shape() != like.shape()) slot = Tensor<T>(like.shape(), T{0});
}

}  // namespace

template <typename T>
void sgd_step(Graph<T>& graph, double lr, double momentum) {
  const T rate = static_cast<T>(lr);
  const T mu = static_cast<T>(momentum);
  for (Parameter<T>* p : finite_trainables(graph)) {
    ensure_slot(p->slot_m, p->value);
    T* w = p->value.raw();
    T* v = p->slot_m.raw();
    const T* g = p->grad.raw();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      v[i] = mu * v[i] + g[i];
      w[i] -= rate * v[i];
    }
  }
}

template <typename T>
void adam_step(Graph<T>& graph, double lr, double beta1, double beta2, double epsilon,
               std::uint64_t step) {
  if (step == 0) throw std::invalid_argument("adam_step: step index is 1-based");
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (Parameter<T>* p : finite_trainables(graph)) {
    ensure_slot(p->slot_m, p->value);
    ensure_slot(p->slot_v, p->value);
    T* w = p->value.raw();
    T* m = p->slot_m.raw();
    T* v = p->slot_v.raw();
    const T* g = p->grad.raw();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      m[i] = static_cast<T>(beta1 * m[i] + (1.0 - beta1) * g[i]);
      v[i] = static_cast<T>(beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] = static_cast<T>(w[i] - lr * mhat / (std::sqrt(vhat) + epsilon));
    }
  }
}

std::string optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer(const std::string& text) {
  if (text == "sgd") return OptimizerKind::kSgd;
  if (text == "adam") return OptimizerKind::kAdam;
  throw std::invalid_argument("unknown optimizer '" + text + "' (expected sgd or adam)");
}

template void sgd_step<float>(Graph<float>&, double, double);
template void sgd_step<double>(Graph<double>&, double, double);
template void adam_step<float>(Graph<float>&, double, double, double, double, std::uint64_t);
template void adam_step<double>(Graph<double>&, double, double, double, double, std::uint64_t);

}  // namespace stnet
