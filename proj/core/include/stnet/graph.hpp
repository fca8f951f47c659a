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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stnet/layers.hpp"
#include "stnet/tensor.hpp"

namespace stnet {

// Raised for structural problems and for runtime failures that can be
// attributed to a specific node.
class GraphError : public std::runtime_error {
 public:
  GraphError(std::string node, const std::string& what)
      : std::runtime_error(node.empty() ? what : "node '" + node + "': " + what),
        node_(std::move(node)) {}

  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

// Executable DAG. Nodes are appended in topological order: every node may
// only consume nodes that already exist, so the graph is acyclic by
// construction. Each entry point belongs to a stream; stream-tagged nodes
// must only depend on the same stream.
template <typename T>
class Graph {
 public:
  struct Node {
    std::string name;
    LayerKind kind = LayerKind::kInput;
    std::unique_ptr<Layer<T>> layer;  // null for inputs
    std::vector<std::size_t> inputs;
    int stream = -1;                  // -1 for shared (head) nodes
    Shape sample_shape;               // inputs only; excludes batch
  };

  Graph() = default;
  Graph(Graph&&) noexcept = default;
  Graph& operator=(Graph&&) noexcept = default;

  std::size_t add_input(std::string name, Shape sample_shape, int stream = -1);
  std::size_t add_node(std::string name, std::unique_ptr<Layer<T>> layer,
                       std::vector<std::size_t> inputs, int stream = -1);
  void set_output(std::size_t id);

  // Throws GraphError unless: exactly one softmax output, every node is
  // reachable from an input, concats have >= 2 inputs, and no stream node
  // reads from another stream.
  void validate() const;

  // One tensor per entry point, in add_input order, each with a leading
  // batch axis. Returns class probabilities (batch, classes).
  const Tensor<T>& forward(std::span<const Tensor<T>> inputs, bool training);

  // Cross-entropy-with-softmax backward from the last training forward.
  void backward(std::span<const int> labels);

  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;
  std::vector<Parameter<T>*> trainable_parameters();

  // Parameters owned by nodes of a given stream (-1 for the shared head).
  std::vector<Parameter<T>*> stream_parameters(int stream);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  Node& node(std::size_t id) { return nodes_.at(id); }
  std::size_t num_inputs() const noexcept { return input_ids_.size(); }
  std::span<const std::size_t> input_ids() const noexcept { return input_ids_; }
  std::optional<std::size_t> output_id() const noexcept { return output_; }
  int num_streams() const;

  // Activation of a node from the last forward.
  const Tensor<T>& value(std::size_t id) const { return values_.at(id); }

  std::uint64_t decision_signature() const;

  // Canonical architecture text this graph was compiled from (may be empty
  // for hand-assembled graphs).
  const std::string& arch_text() const noexcept { return arch_text_; }
  void set_arch_text(std::string text) { arch_text_ = std::move(text); }

  std::size_t parameter_count() const;

 private:
  std::vector<Node> nodes_;
  std::vector<std::size_t> input_ids_;
  std::optional<std::size_t> output_;
  std::vector<Tensor<T>> values_;
  std::vector<Tensor<T>> grads_;
  bool has_forward_ = false;
  bool last_training_ = false;
  std::string arch_text_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace stnet
