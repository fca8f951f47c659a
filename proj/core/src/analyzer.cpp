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

#include "stnet/analyzer.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace stnet {

namespace {

class Walker {
 public:
  Walker(CostReport& report, const FlopConvention& conv) : report_(report), conv_(conv) {}

  // Shapes are per sample: (H, W, C) or (F).
  void layer(const LayerTemplate& l, Shape& shape, const std::string& prefix) {
    CostRow row;
    row.name = next_name(prefix, layer_kind_name(l.kind));
    row.kind = l.kind;
    const std::uint64_t in_elems = shape_size(shape);
    auto spatial = [&](std::string_view who) {
      if (shape.size() != 3) {
        throw std::invalid_argument(row.name + ": " + std::string(who) +
                                    " needs a spatial input, got " + shape_to_string(shape));
      }
    };
    switch (l.kind) {
      case LayerKind::kConv2d:
      case LayerKind::kDepthwiseConv2d: {
        spatial("convolution");
        const auto gy = window_geometry(shape[0], l.kernel, l.stride, l.padding);
        const auto gx = window_geometry(shape[1], l.kernel, l.stride, l.padding);
        if (gy.out == 0 || gx.out == 0) {
          throw std::invalid_argument(row.name + ": window larger than input");
        }
        const std::uint64_t cin = shape[2];
        const std::uint64_t window = l.kernel * l.kernel;
        const bool depthwise = l.kind == LayerKind::kDepthwiseConv2d;
        const std::uint64_t cout = depthwise ? cin : l.filters;
        const std::uint64_t outputs = gy.out * gx.out * cout;
        row.params = depthwise ? window * cin : window * cin * cout;
        row.macs = depthwise ? outputs * window : outputs * window * cin;
        if (l.bias) row.params += cout;
        row.flops = conv_.mac_flops * row.macs + (l.bias ? conv_.bias_per_output * outputs : 0);
        shape = {gy.out, gx.out, cout};
        break;
      }
      case LayerKind::kDense: {
        if (shape.size() != 1) {
          throw std::invalid_argument(row.name + ": dense needs a flat input, got " +
                                      shape_to_string(shape));
        }
        row.params = (shape[0] + (l.bias ? 1 : 0)) * l.filters;
        row.macs = shape[0] * l.filters;
        row.flops = conv_.mac_flops * row.macs + (l.bias ? conv_.bias_per_output * l.filters : 0);
        shape = {l.filters};
        break;
      }
      case LayerKind::kBatchNorm:
        row.params = 4 * shape.back();
        row.flops = conv_.batch_norm_per_element * in_elems;
        break;
      case LayerKind::kRelu:
        row.flops = conv_.relu_per_element * in_elems;
        break;
      case LayerKind::kMaxPool:
      case LayerKind::kAvgPool: {
        spatial("pooling");
        const auto gy = window_geometry(shape[0], l.kernel, l.stride, l.padding);
        const auto gx = window_geometry(shape[1], l.kernel, l.stride, l.padding);
        if (gy.out == 0 || gx.out == 0) {
          throw std::invalid_argument(row.name + ": window larger than input");
        }
        shape = {gy.out, gx.out, shape[2]};
        row.flops = (l.kernel * l.kernel - 1) * shape_size(shape);
        break;
      }
      case LayerKind::kGlobalAvgPool:
        spatial("global_avg_pool");
        row.flops = (shape[0] * shape[1] - 1) * shape[2];
        shape = {shape[2]};
        break;
      case LayerKind::kFlatten:
        shape = {in_elems};
        break;
      case LayerKind::kSoftmax:
        if (shape.size() != 1) throw std::invalid_argument(row.name + ": softmax needs flat input");
        row.flops = conv_.softmax_per_class * shape[0];
        break;
      default:
        throw std::invalid_argument(row.name + ": unsupported layer kind in description");
    }
    row.output_shape = shape;
    push(std::move(row));
  }

  void items(const std::vector<ArchItem>& list, Shape& shape, const std::string& prefix) {
    for (const ArchItem& item : list) {
      if (const auto* l = std::get_if<LayerTemplate>(&item)) {
        layer(*l, shape, prefix);
        continue;
      }
      const auto& block = std::get<ResidualBlock>(item);
      Shape main_shape = shape;
      for (const LayerTemplate& l : block.main) layer(l, main_shape, prefix);
      Shape short_shape = shape;
      for (const LayerTemplate& l : block.shortcut) layer(l, short_shape, prefix);
      CostRow add;
      add.name = next_name(prefix, "residual_add");
      add.kind = LayerKind::kResidualAdd;
      if (main_shape != short_shape) {
        throw std::invalid_argument(add.name + ": branch shapes differ " +
                                    shape_to_string(main_shape) + " vs " +
                                    shape_to_string(short_shape));
      }
      add.flops = conv_.add_per_element * shape_size(main_shape);
      add.output_shape = main_shape;
      shape = main_shape;
      push(std::move(add));
    }
  }

  void concat(std::size_t streams, Shape& shape) {
    CostRow row;
    row.name = next_name("head/", "concat");
    row.kind = LayerKind::kConcat;
    shape = {shape[0] * streams};
    row.output_shape = shape;
    push(std::move(row));
  }

  std::string next_name(const std::string& prefix, std::string_view kind) {
    const std::string key = prefix + std::string(kind);
    return key + "_" + std::to_string(counters_[key]++);
  }

 private:
  void push(CostRow row) {
    report_.total_params += row.params;
    report_.total_flops += row.flops;
    report_.total_macs += row.macs;
    report_.rows.push_back(std::move(row));
  }

  CostReport& report_;
  const FlopConvention& conv_;
  std::map<std::string, std::size_t> counters_;
};

std::string shape_cell(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(s[i]);
  }
  return out;
}

std::string ratio_cell(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5f", ratio);
  return buf;
}

}  // namespace

CostReport analyze(const ArchDescription& desc, const FlopConvention& convention) {
  check_arch(desc);
  CostReport report;
  report.model = desc.name;
  report.convention = convention.name;
  Walker walker(report, convention);
  Shape shape;
  for (std::size_t s = 0; s < desc.streams; ++s) {
    const std::string prefix = desc.streams > 1 ? "s" + std::to_string(s) + "/" : "";
    shape = {desc.height, desc.width, desc.channels};
    walker.items(desc.body, shape, prefix);
    if (desc.joint && shape.size() > 1) {
      LayerTemplate flat;
      flat.kind = LayerKind::kFlatten;
      walker.layer(flat, shape, prefix);
    }
  }
  if (desc.streams > 1) walker.concat(desc.streams, shape);
  walker.items(desc.head, shape, "head/");
  return report;
}

std::uint64_t count_params(const ArchDescription& desc) { return analyze(desc).total_params; }

std::uint64_t count_flops(const ArchDescription& desc, const FlopConvention& convention) {
  return analyze(desc, convention).total_flops;
}

Comparison compare(const StnetName& name, std::size_t classes, const FlopConvention& convention) {
  Comparison c;
  const ArchDescription base = base_desc(name.base, classes);
  const ArchDescription net = stnet_desc(base, name.streams, name.scale, classes);
  c.stnet_name = net.name;
  c.base_name = base.name;
  c.base = analyze(base, convention);
  c.stnet = analyze(net, convention);
  c.ratio_params = static_cast<double>(c.stnet.total_params) /
                   static_cast<double>(c.base.total_params);
  c.ratio_flops = static_cast<double>(c.stnet.total_flops) /
                  static_cast<double>(c.base.total_flops);
  return c;
}

std::string group_thousands(std::uint64_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string cost_report_csv(const CostReport& report) {
  std::ostringstream out;
  out << "model,convention,layer,kind,params,flops,macs,output_shape\n";
  for (const CostRow& r : report.rows) {
    out << report.model << ',' << report.convention << ',' << r.name << ','
        << layer_kind_name(r.kind) << ',' << r.params << ',' << r.flops << ',' << r.macs << ','
        << shape_cell(r.output_shape) << '\n';
  }
  out << report.model << ',' << report.convention << ",total,total," << report.total_params
      << ',' << report.total_flops << ',' << report.total_macs << ",\n";
  return out.str();
}

std::string comparison_markdown(const std::vector<Comparison>& comparisons) {
  std::ostringstream out;
  out << "| Name | FLOPs | Num of Params |\n|---|---|---|\n";
  int index = 1;
  for (const Comparison& c : comparisons) {
    out << "| (" << index++ << ") " << c.stnet_name << " | " << group_thousands(c.stnet.total_flops)
        << " (" << ratio_cell(c.ratio_flops) << ") | " << group_thousands(c.stnet.total_params)
        << " (" << ratio_cell(c.ratio_params) << ") |\n";
    out << "| (" << index++ << ") " << c.base_name << " | " << group_thousands(c.base.total_flops)
        << " | " << group_thousands(c.base.total_params) << " |\n";
  }
  return out.str();
}

std::string comparison_csv(const std::vector<Comparison>& comparisons) {
  std::ostringstream out;
  out << "stnet,base,convention,stnet_flops,base_flops,ratio_flops,stnet_params,base_params,"
         "ratio_params\n";
  for (const Comparison& c : comparisons) {
    out << c.stnet_name << ',' << c.base_name << ',' << c.stnet.convention << ','
        << c.stnet.total_flops << ',' << c.base.total_flops << ',' << ratio_cell(c.ratio_flops)
        << ',' << c.stnet.total_params << ',' << c.base.total_params << ','
        << ratio_cell(c.ratio_params) << '\n';
  }
  return out.str();
}

}  // namespace stnet
