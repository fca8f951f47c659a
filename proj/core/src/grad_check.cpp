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

#include "stnet/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stnet/loss.hpp"
#include "stnet/rng.hpp"

namespace stnet {

namespace {

struct Probe {
  Parameter<double>* param;
  std::size_t index;
  double analytic;
  LayerKind kind;
};

}  // namespace

GradCheckResult grad_check(Graph<double>& graph, std::span<const Tensor<double>> inputs,
                           std::span<const int> labels, const GradCheckOptions& options) {
  if (inputs.empty() || inputs.front().rank() == 0 || inputs.front().dim(0) > 4) {
    throw std::invalid_argument("grad_check requires a batch of at most 4 samples");
  }
  std::vector<Parameter<double>*> all = graph.parameters();
  std::vector<Tensor<double>> snapshot;
  snapshot.reserve(all.size());
  for (const Parameter<double>* p : all) snapshot.push_back(p->value);

  auto loss_at = [&](std::uint64_t& signature) {
    const Tensor<double>& probs = graph.forward(inputs, true);
    signature = graph.decision_signature();
    return cross_entropy(probs, labels);
  };

  std::uint64_t base_signature = 0;
  loss_at(base_signature);
  graph.backward(labels);

  // Group every trainable scalar by the kind of the node that owns it.
  std::map<LayerKind, std::vector<Probe>> candidates;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    auto& node = graph.node(i);
    if (!node.layer) continue;
    for (Parameter<double>* p : node.layer->parameters()) {
      if (!p->trainable) continue;
      for (std::size_t k = 0; k < p->value.size(); ++k) {
        candidates[node.kind].push_back({p, k, p->grad[k], node.kind});
      }
    }
  }

  Rng rng(options.seed);
  GradCheckResult result;
  for (auto& [kind, probes] : candidates) {
    if (probes.size() > options.per_kind) {
      for (std::size_t i = 0; i < options.per_kind; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(probes.size() - i));
        std::swap(probes[i], probes[j]);
      }
      probes.resize(options.per_kind);
    }
    double& kind_max = result.per_kind[kind];
    for (const Probe& probe : probes) {
      double& w = probe.param->value[probe.index];
      const double original = w;
      std::optional<double> numeric;
      for (double h = options.step; h >= options.min_step; h /= 10.0) {
        // Central differences at h and h/2; every perturbation must keep the
        // relu masks and pooling choices of the unperturbed pass.
        double d[2];
        bool smooth = true;
        for (int j = 0; j < 2 && smooth; ++j) {
          const double step = j == 0 ? h : h / 2.0;
          std::uint64_t sig_plus = 0, sig_minus = 0;
          w = original + step;
          const double plus = loss_at(sig_plus);
          w = original - step;
          const double minus = loss_at(sig_minus);
          w = original;
          smooth = sig_plus == base_signature && sig_minus == base_signature;
          d[j] = (plus - minus) / (2.0 * step);
        }
        if (smooth) {
          numeric = (4.0 * d[1] - d[0]) / 3.0;
          break;
        }
      }
      if (!numeric) {
        ++result.skipped;
        continue;
      }
      const double magnitude = std::max(std::fabs(probe.analytic), std::fabs(*numeric));
      if (magnitude < options.zero_gradient) {
        ++result.zero_gradient;
        result.max_abs_error_zero =
            std::max(result.max_abs_error_zero, std::fabs(probe.analytic - *numeric));
        continue;
      }
      const double err = std::fabs(probe.analytic - *numeric) / magnitude;
      ++result.checked;
      ++result.checked_per_kind[kind];
      kind_max = std::max(kind_max, err);
      if (err >= result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_parameter = probe.param->name + "[" + std::to_string(probe.index) + "]";
      }
    }
  }

  for (std::size_t i = 0; i < all.size(); ++i) all[i]->value = snapshot[i];
  return result;
}

}  // namespace stnet
