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
#include <string>

#include "stnet/graph.hpp"

namespace stnet {

// v <- momentum * v + g; w <- w - lr * v for every trainable parameter.
// Non-trainable state (batch-norm running statistics) is never touched.
// The step is aborted before any update if a gradient is non-finite.
template <typename T>
void sgd_step(Graph<T>& graph, double lr, double momentum);

// Bias-corrected Adam; step is the 1-based update index.
template <typename T>
void adam_step(Graph<T>& graph, double lr, double beta1, double beta2,
               double epsilon, std::uint64_t step);

enum class OptimizerKind { kSgd, kAdam };

std::string optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& text);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double lr = 0.01;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  template <typename T>
  void step(Graph<T>& graph) {
    ++steps_;
    if (config_.kind == OptimizerKind::kSgd) {
      sgd_step(graph, config_.lr, config_.momentum);
    } else {
      adam_step(graph, config_.lr, config_.beta1, config_.beta2, config_.epsilon, steps_);
    }
  }

  std::uint64_t steps() const noexcept { return steps_; }
  const OptimizerConfig& config() const noexcept { return config_; }

 private:
  OptimizerConfig config_;
  std::uint64_t steps_ = 0;
};

}  // namespace stnet
