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

#include <span>

#include "stnet/tensor.hpp"

namespace stnet {

inline constexpr double kProbabilityFloor = 1e-12;

// Mean over the batch of -log p[label], with p clamped below at 1e-12.
// Throws std::invalid_argument on out-of-range labels or rows that do not
// sum to one.
template <typename T>
double cross_entropy(const Tensor<T>& probabilities, std::span<const int> labels);

}  // namespace stnet
