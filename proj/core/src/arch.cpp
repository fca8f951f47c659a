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

#include "stnet/arch.hpp"

#include <charconv>
#include <sstream>

namespace stnet {

namespace {

constexpr std::string_view kMagicLine = "stnet-arch v1";

void emit_layer(std::ostringstream& out, const LayerTemplate& l, int indent) {
  out << std::string(static_cast<std::size_t>(indent), ' ') << layer_kind_name(l.kind);
  switch (l.kind) {
    case LayerKind::kConv2d:
      out << " k=" << l.kernel << " s=" << l.stride << " pad=" << padding_name(l.padding)
          << " f=" << l.filters << " bias=" << (l.bias ? 1 : 0);
      break;
    case LayerKind::kDepthwiseConv2d:
      out << " k=" << l.kernel << " s=" << l.stride << " pad=" << padding_name(l.padding)
          << " bias=" << (l.bias ? 1 : 0);
      break;
    case LayerKind::kDense:
      out << " f=" << l.filters << " bias=" << (l.bias ? 1 : 0);
      break;
    case LayerKind::kBatchNorm:
      out << " momentum=" << format_real(l.momentum) << " eps=" << format_real(l.epsilon);
      break;
    case LayerKind::kRelu:
      out << " cap=" << format_real(l.cap);
      break;
    case LayerKind::kMaxPool:
    case LayerKind::kAvgPool:
      out << " k=" << l.kernel << " s=" << l.stride << " pad=" << padding_name(l.padding);
      break;
    default:
      break;
  }
  out << '\n';
}

void emit_items(std::ostringstream& out, const std::vector<ArchItem>& items) {
  for (const ArchItem& item : items) {
    if (const auto* l = std::get_if<LayerTemplate>(&item)) {
      emit_layer(out, *l, 2);
      continue;
    }
    const auto& block = std::get<ResidualBlock>(item);
    out << "  residual\n";
    out << "    main\n";
    for (const LayerTemplate& l : block.main) emit_layer(out, l, 6);
    out << "    shortcut\n";
    for (const LayerTemplate& l : block.shortcut) emit_layer(out, l, 6);
    out << "  end\n";
  }
}

std::vector<std::string> split_words(std::string_view line) {
  std::vector<std::string> words;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::size_t parse_size(std::string_view text, std::size_t line) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ArchParseError(line, "expected an unsigned integer, got '" + std::string(text) + "'");
  }
  return v;
}

double parse_double(std::string_view text, std::size_t line) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ArchParseError(line, "expected a real number, got '" + std::string(text) + "'");
  }
  return v;
}

bool parse_flag(std::string_view text, std::size_t line) {
  if (text == "1") return true;
  if (text == "0") return false;
  throw ArchParseError(line, "expected 0 or 1, got '" + std::string(text) + "'");
}

LayerTemplate parse_layer(const std::vector<std::string>& words, std::size_t line) {
  const auto kind = parse_layer_kind(words[0]);
  if (!kind) throw ArchParseError(line, "unknown layer kind '" + words[0] + "'");
  switch (*kind) {
    case LayerKind::kInput:
    case LayerKind::kConcat:
    case LayerKind::kResidualAdd:
      throw ArchParseError(line, "'" + words[0] + "' is implied by structure, not a layer line");
    default:
      break;
  }
  LayerTemplate l;
  l.kind = *kind;
  for (std::size_t i = 1; i < words.size(); ++i) {
    const auto eq = words[i].find('=');
    if (eq == std::string::npos) {
      throw ArchParseError(line, "expected key=value, got '" + words[i] + "'");
    }
    const std::string key = words[i].substr(0, eq);
    const std::string_view value = std::string_view(words[i]).substr(eq + 1);
    if (key == "k") {
      l.kernel = parse_size(value, line);
    } else if (key == "s") {
      l.stride = parse_size(value, line);
    } else if (key == "pad") {
      const auto p = parse_padding(value);
      if (!p) throw ArchParseError(line, "unknown padding '" + std::string(value) + "'");
      l.padding = *p;
    } else if (key == "f") {
      l.filters = parse_size(value, line);
    } else if (key == "bias") {
      l.bias = parse_flag(value, line);
    } else if (key == "cap") {
      l.cap = parse_double(value, line);
    } else if (key == "momentum") {
      l.momentum = parse_double(value, line);
    } else if (key == "eps") {
      l.epsilon = parse_double(value, line);
    } else {
      throw ArchParseError(line, "unknown key '" + key + "' for " + words[0]);
    }
  }
  return l;
}

void check_layers(const std::vector<LayerTemplate>& layers, const std::string& where) {
  for (const LayerTemplate& l : layers) {
    const bool widthy = l.kind == LayerKind::kConv2d || l.kind == LayerKind::kDense;
    if (widthy && l.filters == 0) {
      throw std::invalid_argument(where + ": " + std::string(layer_kind_name(l.kind)) +
                                  " has zero width");
    }
    const bool windowed = l.kind == LayerKind::kConv2d ||
                          l.kind == LayerKind::kDepthwiseConv2d ||
                          l.kind == LayerKind::kMaxPool || l.kind == LayerKind::kAvgPool;
    if (windowed && (l.kernel == 0 || l.stride == 0)) {
      throw std::invalid_argument(where + ": " + std::string(layer_kind_name(l.kind)) +
                                  " needs positive kernel and stride");
    }
  }
}

void check_items(const std::vector<ArchItem>& items, const std::string& where) {
  for (const ArchItem& item : items) {
    if (const auto* l = std::get_if<LayerTemplate>(&item)) {
      check_layers({*l}, where);
    } else {
      const auto& block = std::get<ResidualBlock>(item);
      if (block.main.empty()) throw std::invalid_argument(where + ": empty residual branch");
      check_layers(block.main, where);
      check_layers(block.shortcut, where);
    }
  }
}

}  // namespace

std::string_view family_name(BaseFamily family) {
  switch (family) {
    case BaseFamily::kVGG16: return "VGG16";
    case BaseFamily::kResNet50: return "ResNet50";
    case BaseFamily::kMobileNetV2: return "MobileNetV2";
    case BaseFamily::kMiniVGG: return "MiniVGG";
    case BaseFamily::kCustom: return "Custom";
  }
  return "Custom";
}

std::optional<BaseFamily> parse_family(std::string_view text) {
  for (BaseFamily f : {BaseFamily::kVGG16, BaseFamily::kResNet50, BaseFamily::kMobileNetV2,
                       BaseFamily::kMiniVGG, BaseFamily::kCustom}) {
    if (family_name(f) == text) return f;
  }
  return std::nullopt;
}

std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string serialize_arch(const ArchDescription& d) {
  std::ostringstream out;
  out << kMagicLine << '\n';
  out << "name " << d.name << '\n';
  out << "family " << family_name(d.family) << '\n';
  out << "alpha " << format_real(d.alpha) << '\n';
  out << "scale " << format_real(d.scale) << '\n';
  out << "input " << d.height << ' ' << d.width << ' ' << d.channels << '\n';
  out << "classes " << d.classes << '\n';
  out << "streams " << d.streams << '\n';
  out << "joint " << (d.joint ? 1 : 0) << '\n';
  out << "body\n";
  emit_items(out, d.body);
  out << "head\n";
  emit_items(out, d.head);
  out << "end\n";
  return out.str();
}

ArchDescription parse_arch(std::string_view text) {
  ArchDescription d;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;

  enum class Section { kHeader, kBody, kHead, kDone } section = Section::kHeader;
  enum class Branch { kNone, kMain, kShortcut } branch = Branch::kNone;
  std::optional<ResidualBlock> block;
  bool saw_magic = false;

  auto target = [&]() -> std::vector<ArchItem>& {
    return section == Section::kBody ? d.body : d.head;
  };

  while (std::getline(in, raw)) {
    ++line;
    const auto words = split_words(raw);
    if (words.empty()) continue;
    if (!saw_magic) {
      if (raw != kMagicLine) throw ArchParseError(line, "missing 'stnet-arch v1' header");
      saw_magic = true;
      continue;
    }
    if (section == Section::kDone) throw ArchParseError(line, "content after final 'end'");
    const std::string& w = words[0];
    if (section == Section::kHeader) {
      auto want = [&](std::size_t n) {
        if (words.size() != n + 1) {
          throw ArchParseError(line, "'" + w + "' expects " + std::to_string(n) + " value(s)");
        }
      };
      if (w == "name") {
        want(1);
        d.name = words[1];
      } else if (w == "family") {
        want(1);
        const auto f = parse_family(words[1]);
        if (!f) throw ArchParseError(line, "unknown family '" + words[1] + "'");
        d.family = *f;
      } else if (w == "alpha") {
        want(1);
        d.alpha = parse_double(words[1], line);
      } else if (w == "scale") {
        want(1);
        d.scale = parse_double(words[1], line);
      } else if (w == "input") {
        want(3);
        d.height = parse_size(words[1], line);
        d.width = parse_size(words[2], line);
        d.channels = parse_size(words[3], line);
      } else if (w == "classes") {
        want(1);
        d.classes = parse_size(words[1], line);
      } else if (w == "streams") {
        want(1);
        d.streams = parse_size(words[1], line);
      } else if (w == "joint") {
        want(1);
        d.joint = parse_flag(words[1], line);
      } else if (w == "body") {
        section = Section::kBody;
      } else {
        throw ArchParseError(line, "unexpected header field '" + w + "'");
      }
      continue;
    }
    if (w == "residual") {
      if (block) throw ArchParseError(line, "nested residual blocks are not supported");
      block.emplace();
      branch = Branch::kNone;
    } else if (w == "main" || w == "shortcut") {
      if (!block) throw ArchParseError(line, "'" + w + "' outside a residual block");
      branch = w == "main" ? Branch::kMain : Branch::kShortcut;
    } else if (w == "end") {
      if (block) {
        target().emplace_back(std::move(*block));
        block.reset();
        branch = Branch::kNone;
      } else if (section == Section::kHead) {
        section = Section::kDone;
      } else {
        throw ArchParseError(line, "'end' without an open block");
      }
    } else if (w == "head") {
      if (block) throw ArchParseError(line, "unterminated residual block");
      if (section != Section::kBody) throw ArchParseError(line, "duplicate 'head'");
      section = Section::kHead;
    } else {
      LayerTemplate l = parse_layer(words, line);
      if (block) {
        if (branch == Branch::kNone) throw ArchParseError(line, "layer before 'main'");
        (branch == Branch::kMain ? block->main : block->shortcut).push_back(l);
      } else {
        target().emplace_back(l);
      }
    }
  }
  if (!saw_magic) throw ArchParseError(line, "empty architecture text");
  if (section != Section::kDone) throw ArchParseError(line, "truncated architecture text");
  try {
    check_arch(d);
  } catch (const std::invalid_argument& e) {
    throw ArchParseError(line, e.what());
  }
  return d;
}

void check_arch(const ArchDescription& d) {
  if (d.streams == 0) throw std::invalid_argument(d.name + ": stream count must be >= 1");
  if (d.height == 0 || d.width == 0 || d.channels == 0 || d.classes == 0) {
    throw std::invalid_argument(d.name + ": input extents and classes must be positive");
  }
  if (d.scale <= 0 || d.alpha <= 0) {
    throw std::invalid_argument(d.name + ": scale and alpha must be positive");
  }
  check_items(d.body, d.name + " body");
  check_items(d.head, d.name + " head");
}

}  // namespace stnet
