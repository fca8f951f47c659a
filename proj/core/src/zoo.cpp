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

#include "stnet/zoo.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "stnet/rng.hpp"

namespace stnet {

namespace {

LayerTemplate conv(std::size_t kernel, std::size_t stride, std::size_t filters, bool bias) {
  LayerTemplate l;
  l.kind = LayerKind::kConv2d;
  l.kernel = kernel;
  l.stride = stride;
  l.filters = filters;
  l.bias = bias;
  return l;
}

LayerTemplate depthwise(std::size_t kernel, std::size_t stride) {
  LayerTemplate l;
  l.kind = LayerKind::kDepthwiseConv2d;
  l.kernel = kernel;
  l.stride = stride;
  return l;
}

LayerTemplate dense(std::size_t units, bool bias = true) {
  LayerTemplate l;
  l.kind = LayerKind::kDense;
  l.filters = units;
  l.bias = bias;
  return l;
}

LayerTemplate simple(LayerKind kind) {
  LayerTemplate l;
  l.kind = kind;
  return l;
}

LayerTemplate batch_norm() { return simple(LayerKind::kBatchNorm); }

LayerTemplate relu(double cap = 0.0) {
  LayerTemplate l = simple(LayerKind::kRelu);
  l.cap = cap;
  return l;
}

LayerTemplate max_pool(std::size_t kernel, std::size_t stride) {
  LayerTemplate l = simple(LayerKind::kMaxPool);
  l.kernel = kernel;
  l.stride = stride;
  return l;
}

ArchDescription skeleton(std::string name, BaseFamily family, InputSpec input,
                         std::size_t classes) {
  ArchDescription d;
  d.name = std::move(name);
  d.family = family;
  d.height = input.height;
  d.width = input.width;
  d.channels = input.channels;
  d.classes = classes;
  return d;
}

std::size_t scaled_width(std::size_t width, double factor) {
  const auto w = static_cast<std::size_t>(std::floor(static_cast<double>(width) / factor + 0.5));
  return std::max<std::size_t>(1, w);
}

void scale_layer(LayerTemplate& l, double factor) {
  if (l.kind == LayerKind::kConv2d || l.kind == LayerKind::kDense) {
    l.filters = scaled_width(l.filters, factor);
  }
}

void scale_items(std::vector<ArchItem>& items, double factor, bool keep_last_dense) {
  std::optional<std::size_t> classifier;
  if (keep_last_dense) {
    for (std::size_t i = items.size(); i-- > 0;) {
      const auto* l = std::get_if<LayerTemplate>(&items[i]);
      if (l != nullptr && l->kind == LayerKind::kDense) {
        classifier = i;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (classifier && *classifier == i) continue;
    if (auto* l = std::get_if<LayerTemplate>(&items[i])) {
      scale_layer(*l, factor);
    } else {
      auto& block = std::get<ResidualBlock>(items[i]);
      for (LayerTemplate& m : block.main) scale_layer(m, factor);
      for (LayerTemplate& s : block.shortcut) scale_layer(s, factor);
    }
  }
}

// ---------------------------------------------------------------------------
// Graph compilation

template <typename T>
class Assembler {
 public:
  explicit Assembler(Graph<T>& graph) : graph_(graph) {}

  std::size_t layer(const LayerTemplate& l, std::size_t in, Shape& shape, int stream,
                    const std::string& prefix) {
    const std::string name = next_name(prefix, layer_kind_name(l.kind));
    std::unique_ptr<Layer<T>> layer;
    try {
      layer = instantiate(l, shape);
      shape = layer->infer_shape(std::span<const Shape>(&shape, 1));
    } catch (const std::invalid_argument& e) {
      throw GraphError(name, e.what());
    }
    return graph_.add_node(name, std::move(layer), {in}, stream);
  }

  std::size_t items(const std::vector<ArchItem>& list, std::size_t in, Shape& shape,
                    int stream, const std::string& prefix) {
    std::size_t cur = in;
    for (const ArchItem& item : list) {
      if (const auto* l = std::get_if<LayerTemplate>(&item)) {
        cur = layer(*l, cur, shape, stream, prefix);
        continue;
      }
      const auto& block = std::get<ResidualBlock>(item);
      Shape main_shape = shape;
      std::size_t main_end = cur;
      for (const LayerTemplate& l : block.main) main_end = layer(l, main_end, main_shape, stream, prefix);
      Shape short_shape = shape;
      std::size_t short_end = cur;
      for (const LayerTemplate& l : block.shortcut) {
        short_end = layer(l, short_end, short_shape, stream, prefix);
      }
      const std::string name = next_name(prefix, "residual_add");
      auto add = make_residual_add<T>();
      const Shape pair[2] = {main_shape, short_shape};
      try {
        shape = add->infer_shape(pair);
      } catch (const std::invalid_argument& e) {
        throw GraphError(name, e.what());
      }
      cur = graph_.add_node(name, std::move(add), {main_end, short_end}, stream);
    }
    return cur;
  }

  std::string next_name(const std::string& prefix, std::string_view kind) {
    const std::string key = prefix + std::string(kind);
    return key + "_" + std::to_string(counters_[key]++);
  }

 private:
  static std::unique_ptr<Layer<T>> instantiate(const LayerTemplate& l, const Shape& shape) {
    const ConvOptions opts{l.kernel, l.stride, l.padding, l.bias};
    switch (l.kind) {
      case LayerKind::kConv2d: return make_conv2d<T>(shape.back(), l.filters, opts);
      case LayerKind::kDepthwiseConv2d: return make_depthwise_conv2d<T>(shape.back(), opts);
      case LayerKind::kDense:
        if (shape.size() != 2) {
          throw std::invalid_argument("dense needs a flat input, got " + shape_to_string(shape));
        }
        return make_dense<T>(shape[1], l.filters, l.bias);
      case LayerKind::kBatchNorm: return make_batch_norm<T>(shape.back(), l.momentum, l.epsilon);
      case LayerKind::kRelu: return make_relu<T>(l.cap);
      case LayerKind::kMaxPool: return make_max_pool<T>(l.kernel, l.stride, l.padding);
      case LayerKind::kAvgPool: return make_avg_pool<T>(l.kernel, l.stride, l.padding);
      case LayerKind::kGlobalAvgPool: return make_global_avg_pool<T>();
      case LayerKind::kFlatten: return make_flatten<T>();
      case LayerKind::kSoftmax: return make_softmax<T>();
      default:
        throw std::invalid_argument("layer kind '" + std::string(layer_kind_name(l.kind)) +
                                    "' cannot appear in a description");
    }
  }

  Graph<T>& graph_;
  std::map<std::string, std::size_t> counters_;
};

std::string_view suffix(const std::string& name) {
  const auto slash = name.rfind('/');
  return slash == std::string::npos ? std::string_view(name)
                                    : std::string_view(name).substr(slash + 1);
}

template <typename T>
void initialize(Graph<T>& graph, std::uint64_t seed) {
  for (std::size_t i = 0; i < graph.size(); ++i) {
    auto& node = graph.node(i);
    if (!node.layer) continue;
    Rng rng(mix_seed(seed, i));
    for (Parameter<T>* p : node.layer->parameters()) {
      const std::string_view role = suffix(p->name);
      if (role == "weight") {
        const Shape& s = p->value.shape();
        std::size_t fan_in = 1;
        for (std::size_t a = 0; a + 1 < s.size(); ++a) fan_in *= s[a];
        if (node.kind == LayerKind::kDepthwiseConv2d) fan_in = s[0] * s[1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (T& w : p->value.data()) w = static_cast<T>(rng.uniform(-limit, limit));
      } else if (role == "gamma" || role == "running_var") {
        p->value.fill(T{1});
      } else {
        p->value.fill(T{0});
      }
    }
  }
}

}  // namespace

std::size_t make_divisible(double value, std::size_t divisor) {
  const auto d = static_cast<double>(divisor);
  auto rounded = static_cast<std::size_t>(std::floor((value + d / 2.0) / d)) * divisor;
  rounded = std::max(divisor, rounded);
  if (static_cast<double>(rounded) < 0.9 * value) rounded += divisor;
  return rounded;
}

ArchDescription vgg16_desc(InputSpec input, std::size_t classes) {
  ArchDescription d = skeleton("VGG16", BaseFamily::kVGG16, input, classes);
  const std::vector<std::vector<std::size_t>> blocks = {
      {64, 64}, {128, 128}, {256, 256, 256}, {512, 512, 512}, {512, 512, 512}};
  for (const auto& block : blocks) {
    for (std::size_t f : block) {
      d.body.emplace_back(conv(3, 1, f, true));
      d.body.emplace_back(relu());
    }
    d.body.emplace_back(max_pool(2, 2));
  }
  d.head = {simple(LayerKind::kFlatten), dense(4096), relu(), dense(4096), relu(),
            dense(classes), simple(LayerKind::kSoftmax)};
  return d;
}

ArchDescription resnet50_desc(InputSpec input, std::size_t classes) {
  ArchDescription d = skeleton("ResNet50", BaseFamily::kResNet50, input, classes);
  d.body = {conv(7, 2, 64, true), batch_norm(), relu(), max_pool(3, 2)};
  struct Stage {
    std::size_t filters, blocks, stride;
  };
  for (const Stage& stage : {Stage{64, 3, 1}, Stage{128, 4, 2}, Stage{256, 6, 2},
                             Stage{512, 3, 2}}) {
    for (std::size_t b = 0; b < stage.blocks; ++b) {
      const std::size_t stride = b == 0 ? stage.stride : 1;
      ResidualBlock block;
      block.main = {conv(1, stride, stage.filters, true), batch_norm(), relu(),
                    conv(3, 1, stage.filters, true), batch_norm(), relu(),
                    conv(1, 1, 4 * stage.filters, true), batch_norm()};
      if (b == 0) block.shortcut = {conv(1, stride, 4 * stage.filters, true), batch_norm()};
      d.body.emplace_back(std::move(block));
      d.body.emplace_back(relu());
    }
  }
  d.body.emplace_back(simple(LayerKind::kGlobalAvgPool));
  d.head = {dense(classes), simple(LayerKind::kSoftmax)};
  return d;
}

ArchDescription mobilenetv2_desc(double alpha, InputSpec input, std::size_t classes) {
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw std::invalid_argument("mobilenetv2 alpha must lie in (0, 1], got " + format_real(alpha));
  }
  ArchDescription d = skeleton("MobileNetV2", BaseFamily::kMobileNetV2, input, classes);
  d.alpha = alpha;
  const std::size_t first = make_divisible(32.0 * alpha);
  d.body = {conv(3, 2, first, false), batch_norm(), relu(6.0)};
  struct Setting {
    std::size_t expansion, filters, repeats, stride;
  };
  std::size_t in = first;
  for (const Setting& s : {Setting{1, 16, 1, 1}, Setting{6, 24, 2, 2}, Setting{6, 32, 3, 2},
                           Setting{6, 64, 4, 2}, Setting{6, 96, 3, 1}, Setting{6, 160, 3, 2},
                           Setting{6, 320, 1, 1}}) {
    const auto truncated = static_cast<double>(
        static_cast<std::size_t>(static_cast<double>(s.filters) * alpha));
    const std::size_t out = make_divisible(truncated);
    for (std::size_t r = 0; r < s.repeats; ++r) {
      const std::size_t stride = r == 0 ? s.stride : 1;
      std::vector<LayerTemplate> main;
      if (s.expansion != 1) {
        main.insert(main.end(), {conv(1, 1, in * s.expansion, false), batch_norm(), relu(6.0)});
      }
      main.insert(main.end(), {depthwise(3, stride), batch_norm(), relu(6.0),
                               conv(1, 1, out, false), batch_norm()});
      if (stride == 1 && in == out) {
        d.body.emplace_back(ResidualBlock{std::move(main), {}});
      } else {
        for (LayerTemplate& l : main) d.body.emplace_back(l);
      }
      in = out;
    }
  }
  const std::size_t last = alpha > 1.0 ? make_divisible(1280.0 * alpha) : 1280;
  d.body.insert(d.body.end(), {conv(1, 1, last, false), batch_norm(), relu(6.0),
                               simple(LayerKind::kGlobalAvgPool)});
  d.head = {dense(classes), simple(LayerKind::kSoftmax)};
  return d;
}

ArchDescription minivgg_desc(std::vector<std::size_t> filters, InputSpec input,
                             std::size_t classes) {
  if (filters.empty()) throw std::invalid_argument("minivgg needs at least one filter width");
  ArchDescription d = skeleton("MiniVGG", BaseFamily::kMiniVGG, input, classes);
  for (std::size_t i = 0; i < filters.size(); i += 2) {
    d.body.emplace_back(conv(3, 1, filters[i], true));
    d.body.emplace_back(relu());
    if (i + 1 < filters.size()) {
      d.body.emplace_back(conv(3, 1, filters[i + 1], true));
      d.body.emplace_back(relu());
    }
    d.body.emplace_back(max_pool(2, 2));
  }
  d.head = {simple(LayerKind::kFlatten), dense(128), relu(), dense(classes),
            simple(LayerKind::kSoftmax)};
  check_arch(d);
  return d;
}

ArchDescription base_desc(BaseFamily family, std::size_t classes, InputSpec input) {
  switch (family) {
    case BaseFamily::kVGG16: return vgg16_desc(input, classes);
    case BaseFamily::kResNet50: return resnet50_desc(input, classes);
    case BaseFamily::kMobileNetV2: return mobilenetv2_desc(1.0, input, classes);
    case BaseFamily::kMiniVGG: return minivgg_desc({16, 16, 32, 32}, input, classes);
    case BaseFamily::kCustom: break;
  }
  throw std::invalid_argument("no canonical description for a custom family");
}

ArchDescription downscale(const ArchDescription& desc, double factor) {
  if (!(factor >= 1.0)) {
    throw std::invalid_argument("downscale factor must be >= 1, got " + format_real(factor));
  }
  if (factor == 1.0) return desc;
  if (desc.family == BaseFamily::kMobileNetV2) {
    ArchDescription d = mobilenetv2_desc(desc.alpha / factor,
                                         {desc.height, desc.width, desc.channels}, desc.classes);
    d.name = desc.name;
    d.scale = desc.scale * factor;
    return d;
  }
  ArchDescription d = desc;
  d.scale = desc.scale * factor;
  scale_items(d.body, factor, false);
  scale_items(d.head, factor, true);
  return d;
}

StnetName parse_stnet_name(std::string_view text) {
  constexpr std::string_view kPrefix = "STNet";
  if (text.substr(0, kPrefix.size()) != kPrefix) {
    throw NameParseError(0, "expected 'STNet{streams}_{scale}_{base}'");
  }
  std::size_t pos = kPrefix.size();
  const bool parens = pos < text.size() && text[pos] == '(';
  if (parens) ++pos;
  StnetName name;
  {
    const char* begin = text.data() + pos;
    const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), name.streams);
    if (ec != std::errc{} || ptr == begin) throw NameParseError(pos, "expected stream count");
    if (*begin == '0' || name.streams == 0) {
      throw NameParseError(pos, "stream count must be a positive integer without leading zeros");
    }
    pos = static_cast<std::size_t>(ptr - text.data());
  }
  if (parens) {
    if (pos >= text.size() || text[pos] != ')') throw NameParseError(pos, "expected ')'");
    ++pos;
  }
  if (pos >= text.size() || text[pos] != '_') throw NameParseError(pos, "expected '_'");
  ++pos;
  {
    const char* begin = text.data() + pos;
    const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), name.scale,
                                           std::chars_format::fixed);
    if (ec != std::errc{} || ptr == begin || *begin == '-' || *begin == '+') {
      throw NameParseError(pos, "expected scale factor");
    }
    if (!(name.scale > 0.0) || !std::isfinite(name.scale)) {
      throw NameParseError(pos, "scale factor must be positive");
    }
    pos = static_cast<std::size_t>(ptr - text.data());
  }
  if (pos >= text.size() || text[pos] != '_') throw NameParseError(pos, "expected '_'");
  ++pos;
  const auto base = parse_family(text.substr(pos));
  if (!base || *base == BaseFamily::kCustom) {
    throw NameParseError(pos, "expected base network name (VGG16, ResNet50, MobileNetV2, MiniVGG)");
  }
  name.base = *base;
  return name;
}

std::string format_stnet_name(const StnetName& name) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), name.scale,
                                       std::chars_format::fixed);
  return "STNet" + std::to_string(name.streams) + "_" + std::string(buf, ptr) + "_" +
         std::string(family_name(name.base));
}

ArchDescription stnet_desc(const ArchDescription& base, std::size_t streams, double scale,
                           std::size_t classes) {
  if (streams == 0) throw std::invalid_argument("an STNet needs at least one stream");
  if (base.joint || base.streams != 1) {
    throw std::invalid_argument("STNet streams must be derived from a single-stream base");
  }
  const ArchDescription scaled = downscale(base, scale);
  ArchDescription d = scaled;
  d.name = format_stnet_name({streams, scale, base.family});
  d.streams = streams;
  d.joint = true;
  d.classes = classes;
  d.head = {dense(kJointHiddenUnits), relu(), batch_norm(), relu(), dense(classes),
            simple(LayerKind::kSoftmax)};
  check_arch(d);
  return d;
}

ArchDescription stnet_desc(const StnetName& name, std::size_t classes, InputSpec input) {
  return stnet_desc(base_desc(name.base, classes, input), name.streams, name.scale, classes);
}

ArchDescription model_desc(std::string_view model, std::size_t classes, InputSpec input) {
  if (const auto family = parse_family(model); family && *family != BaseFamily::kCustom) {
    return base_desc(*family, classes, input);
  }
  return stnet_desc(parse_stnet_name(model), classes, input);
}

template <typename T>
Graph<T> compile(const ArchDescription& desc, std::uint64_t seed) {
  check_arch(desc);
  Graph<T> graph;
  Assembler<T> assembler(graph);
  const Shape sample{desc.height, desc.width, desc.channels};
  std::vector<std::size_t> ends;
  Shape end_shape;
  for (std::size_t s = 0; s < desc.streams; ++s) {
    const int stream = static_cast<int>(s);
    const std::string prefix = desc.streams > 1 ? "s" + std::to_string(s) + "/" : "";
    const std::size_t in =
        graph.add_input(desc.streams > 1 ? "stream" + std::to_string(s) : "input", sample, stream);
    Shape shape{1, desc.height, desc.width, desc.channels};
    std::size_t end = assembler.items(desc.body, in, shape, stream, prefix);
    if (desc.joint && shape.size() > 2) {
      LayerTemplate flat;
      flat.kind = LayerKind::kFlatten;
      end = assembler.layer(flat, end, shape, stream, prefix);
    }
    ends.push_back(end);
    end_shape = shape;
  }
  std::size_t cur = ends.front();
  if (ends.size() > 1) {
    auto concat = make_concat<T>();
    std::vector<Shape> shapes(ends.size(), end_shape);
    end_shape = concat->infer_shape(shapes);
    cur = graph.add_node(assembler.next_name("head/", "concat"), std::move(concat), ends, -1);
  }
  cur = assembler.items(desc.head, cur, end_shape, -1, "head/");
  graph.set_output(cur);
  graph.validate();
  initialize(graph, seed);
  graph.set_arch_text(serialize_arch(desc));
  return graph;
}

template <typename T>
void check_stream_decoupling(const Graph<T>& graph) {
  graph.validate();
  std::set<const void*> storage;
  for (const Parameter<T>* p : graph.parameters()) {
    if (!storage.insert(p->value.raw()).second) {
      throw GraphError(p->name, "parameter storage shared with another node");
    }
  }
}

template Graph<float> compile<float>(const ArchDescription&, std::uint64_t);
template Graph<double> compile<double>(const ArchDescription&, std::uint64_t);
template void check_stream_decoupling<float>(const Graph<float>&);
template void check_stream_decoupling<double>(const Graph<double>&);

}  // namespace stnet
