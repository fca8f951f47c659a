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

#include "stnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "stnet/arch.hpp"
#include "stnet/zoo.hpp"

namespace stnet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'T', 'N', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint64_t v) {
  if (v > 0xffffffffu) throw CheckpointError("value does not fit in u32");
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}

  void need(std::size_t n, const char* what) const {
    if (b_.size() - pos_ < n) {
      throw CheckpointError(std::string("truncated checkpoint while reading ") + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  const std::uint8_t* take(std::size_t n, const char* what) {
    need(n, what);
    const std::uint8_t* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Graph<float>& graph) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kCheckpointVersion);
  const std::string& text = graph.arch_text();
  put_u32(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  const auto params = graph.parameters();
  put_u32(out, params.size());
  for (const Parameter<float>* p : params) {
    put_u32(out, p->value.rank());
    for (std::size_t d : p->value.shape()) put_u32(out, d);
    const auto* raw = reinterpret_cast<const std::uint8_t*>(p->value.raw());
    out.insert(out.end(), raw, raw + p->value.size() * sizeof(float));
  }
  return out;
}

void save_checkpoint(const Graph<float>& graph, const std::filesystem::path& file) {
  const auto bytes = encode_checkpoint(graph);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(file.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(file.string() + ": write failed");
}

CheckpointContents decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(4, "magic"), kMagic, 4) != 0) throw CheckpointError("bad magic");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  CheckpointContents c;
  const std::uint32_t len = r.u32("architecture length");
  const auto* text = r.take(len, "architecture text");
  c.arch_text.assign(reinterpret_cast<const char*>(text), len);
  const std::uint32_t count = r.u32("tensor count");
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t rank = r.u32("tensor rank");
    if (rank == 0) throw CheckpointError("tensor " + std::to_string(t) + " has rank 0");
    Shape shape(rank);
    std::uint64_t elems = 1;
    for (auto& d : shape) {
      d = r.u32("tensor dims");
      if (d == 0) throw CheckpointError("tensor " + std::to_string(t) + " has a zero extent");
      elems *= d;
    }
    r.need(elems * sizeof(float), "tensor data");
    Tensor<float> value(shape);
    std::memcpy(value.raw(), r.take(elems * sizeof(float), "tensor data"), elems * sizeof(float));
    c.tensors.push_back(std::move(value));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint tensors");
  return c;
}

void restore_parameters(Graph<float>& graph, const CheckpointContents& contents) {
  auto params = graph.parameters();
  if (params.size() != contents.tensors.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(contents.tensors.size()) +
                          " tensors, graph has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value.shape() != contents.tensors[i].shape()) {
      throw CheckpointError("shape mismatch for '" + params[i]->name + "': checkpoint " +
                            shape_to_string(contents.tensors[i].shape()) + ", graph " +
                            shape_to_string(params[i]->value.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = contents.tensors[i];
}

Graph<float> load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw CheckpointError(file.string() + ": cannot open checkpoint");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
  const CheckpointContents contents = decode_checkpoint(bytes);
  Graph<float> graph;
  try {
    graph = compile<float>(parse_arch(contents.arch_text), 0);
  } catch (const ArchParseError& e) {
    throw CheckpointError(std::string("embedded architecture: ") + e.what());
  }
  restore_parameters(graph, contents);
  return graph;
}

}  // namespace stnet
