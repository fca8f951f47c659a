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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "run_config.hpp"
#include "stnet/datasets.hpp"

namespace stnet::cli {
namespace {

TEST(RunConfig, ParsesKeyValueLinesWithComments) {
  const RunConfig c = RunConfig::parse(
      "# desk run\nmodel = STNet3_3_MiniVGG\n  epochs=15  # fifteen\n\nkinds = gaussian-noise, contrast ,\nlr = 0.01\n");
  EXPECT_EQ(c.require("model"), "STNet3_3_MiniVGG");
  EXPECT_EQ(c.get_u64("epochs", 0), 15u);
  EXPECT_DOUBLE_EQ(c.get_double("lr", 0.0), 0.01);
  EXPECT_EQ(c.get_list("kinds"), (std::vector<std::string>{"gaussian-noise", "contrast"}));
  EXPECT_EQ(c.get("absent", "fallback"), "fallback");
  EXPECT_EQ(c.get_u64("absent", 7), 7u);
  EXPECT_TRUE(c.get_list("absent").empty());
  EXPECT_EQ(c.values().size(), 4u);
}

TEST(RunConfig, Errors) {
  EXPECT_THROW(RunConfig::parse("just words\n"), ConfigError);
  EXPECT_THROW(RunConfig::parse(" = 5\n"), ConfigError);
  const RunConfig c = RunConfig::parse("n = -3\nx = abc\nempty =\n");
  EXPECT_THROW(c.get_u64("n", 0), ConfigError);
  EXPECT_THROW(c.get_double("x", 0), ConfigError);
  EXPECT_THROW(c.require("empty"), ConfigError);
  EXPECT_THROW(c.require("missing"), ConfigError);
  EXPECT_THROW(RunConfig::load("/nonexistent/stnet.cfg"), ConfigError);
}

TEST(RunConfig, OverridesReplaceFileValues) {
  RunConfig c = RunConfig::parse("epochs = 15\n");
  c.set_assignment("epochs=2");
  c.set_assignment(" seed = 9 ");
  EXPECT_EQ(c.get_u64("epochs", 0), 2u);
  EXPECT_EQ(c.get_u64("seed", 0), 9u);
  EXPECT_THROW(c.set_assignment("noequals"), ConfigError);
}

TEST(RunConfig, LoadsFromFile) {
  const auto file = std::filesystem::temp_directory_path() / "stnet_cli_config_test.cfg";
  {
    std::ofstream out(file);
    out << "model = MiniVGG\r\nbatch = 32\r\n";
  }
  const RunConfig c = RunConfig::load(file);
  EXPECT_EQ(c.require("model"), "MiniVGG");
  EXPECT_EQ(c.get_u64("batch", 0), 32u);
  std::filesystem::remove(file);
}

TEST(SplitList, TrimsAndDropsEmpty) {
  EXPECT_EQ(split_list(" a ,b,, c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(split_list("").empty());
  EXPECT_EQ(split_list("one"), (std::vector<std::string>{"one"}));
}

TEST(LoadData, SynthFallbackHasDisjointIds) {
  const DataSource d = load_data("synth", 30, 20, 4);
  EXPECT_EQ(d.description, "synth-shapes");
  EXPECT_EQ(d.train.size(), 30u);
  EXPECT_EQ(d.test.size(), 20u);
  EXPECT_EQ(d.test.id(0), kCifarTestIdBase);
  EXPECT_EQ(d.train.id(0), 0u);
  EXPECT_EQ(load_data("synth", 30, 20, 4).train, d.train);
  EXPECT_THROW(load_data("/nonexistent/cifar", 1, 1, 0), DatasetError);
}

}  // namespace
}  // namespace stnet::cli
