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

#include "stnet/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stnet {

template <typename T>
double cross_entropy(const Tensor<T>& probabilities, std::span<const int> labels) {
  if (probabilities.rank() != 2) {
    throw std::invalid_argument("cross_entropy expects (batch, classes) probabilities");
  }
  const std::size_t batch = probabilities.dim(0);
  const std::size_t classes = probabilities.dim(1);
  if (labels.size() != batch) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) +
                                " labels for batch of " + std::to_string(batch));
  }
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                  " outside [0, " + std::to_string(classes) + ")");
    }
    double row_sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j) row_sum += probabilities[b * classes + j];
    if (std::fabs(row_sum - 1.0) > 1e-3) {
      throw std::invalid_argument("cross_entropy: probability row " + std::to_string(b) +
                                  " sums to " + std::to_string(row_sum));
    }
    const double p = probabilities[b * classes + static_cast<std::size_t>(label)];
    total -= std::log(std::max(p, kProbabilityFloor));
  }
  return total / static_cast<double>(batch);
}

template double cross_entropy<float>(const Tensor<float>&, std::span<const int>);
template double cross_entropy<double>(const Tensor<double>&, std::span<const int>);

}  // namespace stnet
