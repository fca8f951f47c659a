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

#include "stnet/graph.hpp"

#include <algorithm>

namespace stnet {

template <typename T>
std::size_t Graph<T>::add_input(std::string name, Shape sample_shape, int stream) {
  if (sample_shape.empty()) throw GraphError(name, "input needs a sample shape");
  Node node;
  node.name = std::move(name);
  node.kind = LayerKind::kInput;
  node.stream = stream;
  node.sample_shape = std::move(sample_shape);
  nodes_.push_back(std::move(node));
  input_ids_.push_back(nodes_.size() - 1);
  has_forward_ = false;
  return nodes_.size() - 1;
}

template <typename T>
std::size_t Graph<T>::add_node(std::string name, std::unique_ptr<Layer<T>> layer,
                               std::vector<std::size_t> inputs, int stream) {
  if (!layer) throw GraphError(name, "null layer");
  if (inputs.empty()) throw GraphError(name, "node has no inputs");
  for (std::size_t id : inputs) {
    if (id >= nodes_.size()) {
      throw GraphError(name, "input id " + std::to_string(id) +
                                 " does not refer to an existing node");
    }
  }
  Node node;
  node.name = std::move(name);
  node.kind = layer->kind();
  node.inputs = std::move(inputs);
  node.stream = stream;
  for (Parameter<T>* p : layer->parameters()) p->name = node.name + "/" + p->name;
  node.layer = std::move(layer);
  nodes_.push_back(std::move(node));
  has_forward_ = false;
  return nodes_.size() - 1;
}

template <typename T>
void Graph<T>::set_output(std::size_t id) {
  if (id >= nodes_.size()) throw GraphError("", "output id out of range");
  output_ = id;
}

template <typename T>
void Graph<T>::validate() const {
  if (input_ids_.empty()) throw GraphError("", "graph has no inputs");
  if (!output_) throw GraphError("", "graph has no output");
  const Node& out = nodes_[*output_];
  if (out.kind != LayerKind::kSoftmax) {
    throw GraphError(out.name, "output node must be softmax");
  }
  std::vector<bool> reachable(nodes_.size(), false);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.kind == LayerKind::kInput) {
      reachable[i] = true;
      continue;
    }
    if (n.kind == LayerKind::kConcat && n.inputs.size() < 2) {
      throw GraphError(n.name, "concat joins fewer than two branches");
    }
    for (std::size_t id : n.inputs) {
      if (id >= i) throw GraphError(n.name, "edge violates topological order");
      reachable[i] = reachable[i] || reachable[id];
      if (n.stream >= 0 && nodes_[id].stream != n.stream) {
        throw GraphError(n.name, "stream " + std::to_string(n.stream) +
                                     " reads from node '" + nodes_[id].name +
                                     "' outside its stream");
      }
    }
    if (!reachable[i]) throw GraphError(n.name, "node unreachable from any input");
  }
}

template <typename T>
const Tensor<T>& Graph<T>::forward(std::span<const Tensor<T>> inputs, bool training) {
  if (!output_) throw GraphError("", "graph has no output");
  if (inputs.size() != input_ids_.size()) {
    throw GraphError("", "expected " + std::to_string(input_ids_.size()) +
                             " input tensors, got " + std::to_string(inputs.size()));
  }
  values_.resize(nodes_.size());
  std::size_t batch = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Node& n = nodes_[input_ids_[i]];
    const Shape& s = inputs[i].shape();
    Shape expected{s.empty() ? 0 : s[0]};
    expected.insert(expected.end(), n.sample_shape.begin(), n.sample_shape.end());
    if (s != expected || (i > 0 && s[0] != batch)) {
      throw GraphError(n.name, "input shape " + shape_to_string(s) +
                                   " does not match declared (batch" +
                                   shape_to_string(n.sample_shape).substr(1));
    }
    batch = s[0];
    if (!inputs[i].all_finite()) throw GraphError(n.name, "non-finite input");
    values_[input_ids_[i]] = inputs[i];
  }
  std::vector<Shape> shapes;
  std::vector<const Tensor<T>*> args;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (n.kind == LayerKind::kInput) continue;
    shapes.clear();
    args.clear();
    for (std::size_t id : n.inputs) {
      shapes.push_back(values_[id].shape());
      args.push_back(&values_[id]);
    }
    try {
      values_[i].resize(n.layer->infer_shape(shapes));
    } catch (const std::invalid_argument& e) {
      throw GraphError(n.name, e.what());
    }
    n.layer->forward(args, values_[i], training);
  }
  has_forward_ = true;
  last_training_ = training;
  const Tensor<T>& result = values_[*output_];
  if (!result.all_finite()) throw GraphError(nodes_[*output_].name, "non-finite output");
  return result;
}

template <typename T>
void Graph<T>::backward(std::span<const int> labels) {
  if (!has_forward_) throw GraphError("", "backward called before forward");
  if (!last_training_) {
    throw GraphError("", "backward requires a training-mode forward pass");
  }
  const Node& out = nodes_[*output_];
  if (out.kind != LayerKind::kSoftmax) throw GraphError(out.name, "output is not softmax");
  const Tensor<T>& probs = values_[*output_];
  const std::size_t batch = probs.dim(0);
  const std::size_t classes = probs.dim(1);
  if (labels.size() != batch) {
    throw GraphError("", "expected " + std::to_string(batch) + " labels, got " +
                             std::to_string(labels.size()));
  }
  grads_.resize(nodes_.size());
  std::vector<bool> live(nodes_.size(), false);
  auto activate = [&](std::size_t id) {
    if (live[id]) return;
    live[id] = true;
    grads_[id].resize(values_[id].shape());
    grads_[id].fill(T{0});
  };

  const std::size_t logits = out.inputs.front();
  activate(logits);
  const T inv_batch = T{1} / static_cast<T>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw GraphError("", "label " + std::to_string(label) + " out of range");
    }
    for (std::size_t j = 0; j < classes; ++j) {
      const T target = static_cast<std::size_t>(label) == j ? T{1} : T{0};
      grads_[logits][b * classes + j] = (probs[b * classes + j] - target) * inv_batch;
    }
  }

  std::vector<const Tensor<T>*> args;
  std::vector<Tensor<T>*> gargs;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.kind == LayerKind::kInput) continue;
    if (!live[i]) {
      for (Parameter<T>* p : n.layer->parameters()) p->grad.fill(T{0});
      continue;
    }
    args.clear();
    gargs.clear();
    for (std::size_t id : n.inputs) {
      args.push_back(&values_[id]);
      if (nodes_[id].kind == LayerKind::kInput) {
        gargs.push_back(nullptr);
      } else {
        activate(id);
        gargs.push_back(&grads_[id]);
      }
    }
    n.layer->backward(args, values_[i], grads_[i], gargs);
  }
}

template <typename T>
std::vector<Parameter<T>*> Graph<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (Node& n : nodes_) {
    if (!n.layer) continue;
    for (Parameter<T>* p : n.layer->parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> Graph<T>::parameters() const {
  std::vector<const Parameter<T>*> out;
  for (const Node& n : nodes_) {
    if (!n.layer) continue;
    for (Parameter<T>* p : n.layer->parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Graph<T>::trainable_parameters() {
  std::vector<Parameter<T>*> out;
  for (Parameter<T>* p : parameters()) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Graph<T>::stream_parameters(int stream) {
  std::vector<Parameter<T>*> out;
  for (Node& n : nodes_) {
    if (!n.layer || n.stream != stream) continue;
    for (Parameter<T>* p : n.layer->parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
int Graph<T>::num_streams() const {
  int streams = 0;
  for (std::size_t id : input_ids_) streams = std::max(streams, nodes_[id].stream + 1);
  return std::max(streams, 1);
}

template <typename T>
std::uint64_t Graph<T>::decision_signature() const {
  std::uint64_t h = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].layer && i < values_.size()) nodes_[i].layer->hash_decisions(values_[i], h);
  }
  return h;
}

template <typename T>
std::size_t Graph<T>::parameter_count() const {
  std::size_t total = 0;
  for (const Parameter<T>* p : parameters()) total += p->value.size();
  return total;
}

template class Graph<float>;
template class Graph<double>;

}  // namespace stnet
