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
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stnet/image.hpp"

namespace stnet::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Plain key = value lines; '#' starts a comment. Later assignments win, so
// command-line overrides are applied by calling set() after parsing.
class RunConfig {
 public:
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& file);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  // "key=value" form used by --set.
  void set_assignment(std::string_view assignment);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma separated

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(std::string_view text);

struct DataSource {
  std::string description;  // "cifar10:<dir>" or "synth-shapes"
  LabeledImageSet train;
  LabeledImageSet test;
};

// `data` is "synth" or a directory of CIFAR-10 batch files; empty means
// $STNET_DATA_DIR when set, else synth. Synthetic sets use synth_n and
// synth_test_n images drawn from data_seed.
DataSource load_data(const std::string& data, std::size_t synth_n, std::size_t synth_test_n,
                     std::uint64_t data_seed);

std::string default_data_root();

}  // namespace stnet::cli
