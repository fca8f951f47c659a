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
#include <vector>

#include "stnet/arch.hpp"
#include "stnet/tensor.hpp"
#include "stnet/zoo.hpp"

namespace stnet {

// Named, versioned cost table. Conv and dense layers cost mac_flops per
// multiply-accumulate; element-wise layers cost the listed amount per
// output element; pooling costs (window - 1) per output element; softmax
// costs softmax_per_class per class.
struct FlopConvention {
  std::string name = "stnet-flops-v1";
  std::uint64_t mac_flops = 2;
  std::uint64_t bias_per_output = 1;
  std::uint64_t batch_norm_per_element = 2;
  std::uint64_t relu_per_element = 1;
  std::uint64_t add_per_element = 1;
  std::uint64_t softmax_per_class = 5;
};

struct CostRow {
  std::string name;
  LayerKind kind = LayerKind::kInput;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
  std::uint64_t macs = 0;
  Shape output_shape;  // per sample
};

struct CostReport {
  std::string model;
  std::string convention;
  std::vector<CostRow> rows;
  std::uint64_t total_params = 0;
  std::uint64_t total_flops = 0;
  std::uint64_t total_macs = 0;
};

// Per-layer accounting in compile() order with identical row names.
// Batch-norm counts 4 parameters per channel (scale, shift, running mean
// and variance). Throws std::invalid_argument on unresolvable shapes.
CostReport analyze(const ArchDescription& desc, const FlopConvention& convention = {});

std::uint64_t count_params(const ArchDescription& desc);
std::uint64_t count_flops(const ArchDescription& desc, const FlopConvention& convention = {});

struct Comparison {
  std::string stnet_name;
  std::string base_name;
  CostReport base;
  CostReport stnet;
  double ratio_params = 0.0;  // STNet / base
  double ratio_flops = 0.0;
};

Comparison compare(const StnetName& name, std::size_t classes = 10,
                   const FlopConvention& convention = {});

std::string cost_report_csv(const CostReport& report);

// Table shaped like the FLOPs/params comparison: Name, FLOPs, Num of
// Params, with STNet/base ratios in brackets.
std::string comparison_markdown(const std::vector<Comparison>& comparisons);
std::string comparison_csv(const std::vector<Comparison>& comparisons);

// Formats with thousands separators: 33638218 -> "33,638,218".
std::string group_thousands(std::uint64_t value);

}  // namespace stnet
