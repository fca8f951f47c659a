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
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "stnet/graph.hpp"

namespace stnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Little-endian layout: "STNT", u32 version, u32 arch-text length, arch
// text, u32 tensor count, then per parameter tensor (graph order) u32
// rank, u32 dims, raw float32 values. Running statistics are included;
// optimizer slots are not.
std::vector<std::uint8_t> encode_checkpoint(const Graph<float>& graph);
void save_checkpoint(const Graph<float>& graph, const std::filesystem::path& file);

struct CheckpointContents {
  std::string arch_text;
  std::vector<Tensor<float>> tensors;
};

CheckpointContents decode_checkpoint(const std::vector<std::uint8_t>& bytes);

// Rebuilds the graph from the embedded architecture and restores values.
Graph<float> load_checkpoint(const std::filesystem::path& file);

// Copies tensors into an existing graph; shapes must agree one for one.
void restore_parameters(Graph<float>& graph, const CheckpointContents& contents);

}  // namespace stnet
