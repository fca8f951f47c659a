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

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "stnet/graph.hpp"

namespace stnet {

struct GradCheckOptions {
  double step = 1e-3;
  // Parameters sampled per layer kind; kinds with fewer are checked fully.
  std::size_t per_kind = 128;
  std::uint64_t seed = 0;
  // The step is shrunk tenfold whenever a perturbation flips a relu mask or
  // pooling argmax; below this the parameter is skipped.
  double min_step = 1e-8;
  // Probes where both gradients are below this magnitude have no meaningful
  // relative error (e.g. a bias feeding batch norm is exactly zero); they
  // are counted separately and bounded in absolute terms.
  double zero_gradient = 1e-7;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::map<LayerKind, double> per_kind;
  std::map<LayerKind, std::size_t> checked_per_kind;
  std::string worst_parameter;
  std::size_t zero_gradient = 0;
  double max_abs_error_zero = 0.0;
};

// Compares backward() against central finite differences of the
// cross-entropy loss in training mode, Richardson-extrapolated from steps h
// and h/2 so truncation error is O(h^4). Relative error is
// |a - n| / max(|a|, |n|) over probes above the zero-gradient threshold. Parameters and running statistics are
// restored afterwards. Requires batch <= 4.
GradCheckResult grad_check(Graph<double>& graph, std::span<const Tensor<double>> inputs,
                           std::span<const int> labels, const GradCheckOptions& options = {});

}  // namespace stnet
