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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stnet/layer_kind.hpp"
#include "stnet/tensor.hpp"

namespace stnet {

// A learnable or state tensor owned by a layer. Optimizer slots live
// next to the value so the optimizer itself stays stateless.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;
  Tensor<T> slot_m;
  Tensor<T> slot_v;
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;

  // Shapes include the batch axis. Throws std::invalid_argument when the
  // inputs are incompatible with the layer.
  virtual Shape infer_shape(std::span<const Shape> inputs) const = 0;

  virtual void forward(std::span<const Tensor<T>* const> inputs,
                       Tensor<T>& output, bool training) = 0;

  // Accumulates dL/dinput into grad_inputs, which the caller has sized and
  // zeroed. Parameter gradients are overwritten, not accumulated.
  virtual void backward(std::span<const Tensor<T>* const> inputs,
                        const Tensor<T>& output, const Tensor<T>& grad_output,
                        std::span<Tensor<T>* const> grad_inputs) = 0;

  virtual std::vector<Parameter<T>*> parameters() { return {}; }

  // Folds data-dependent branch decisions (relu masks, pooling argmax) of
  // the last forward, whose result was output, into h. Used to detect kinks during gradient checks.
  virtual void hash_decisions(const Tensor<T>& /*output*/,
                              std::uint64_t& /*h*/) const {}
};

struct ConvOptions {
  std::size_t kernel = 3;
  std::size_t stride = 1;
  Padding padding = Padding::kSame;
  bool bias = true;
};

template <typename T>
std::unique_ptr<Layer<T>> make_conv2d(std::size_t in_channels,
                                      std::size_t filters, ConvOptions opts);
template <typename T>
std::unique_ptr<Layer<T>> make_depthwise_conv2d(std::size_t channels,
                                                ConvOptions opts);
template <typename T>
std::unique_ptr<Layer<T>> make_dense(std::size_t in_features,
                                     std::size_t out_features, bool bias);
template <typename T>
std::unique_ptr<Layer<T>> make_batch_norm(std::size_t channels,
                                          double momentum, double epsilon);
// cap <= 0 means unbounded; cap = 6 gives ReLU6.
template <typename T>
std::unique_ptr<Layer<T>> make_relu(double cap = 0.0);
template <typename T>
std::unique_ptr<Layer<T>> make_max_pool(std::size_t kernel, std::size_t stride,
                                        Padding padding);
template <typename T>
std::unique_ptr<Layer<T>> make_avg_pool(std::size_t kernel, std::size_t stride,
                                        Padding padding);
template <typename T>
std::unique_ptr<Layer<T>> make_global_avg_pool();
template <typename T>
std::unique_ptr<Layer<T>> make_flatten();
template <typename T>
std::unique_ptr<Layer<T>> make_concat();
template <typename T>
std::unique_ptr<Layer<T>> make_residual_add();
template <typename T>
std::unique_ptr<Layer<T>> make_softmax();

}  // namespace stnet
