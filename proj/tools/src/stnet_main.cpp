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

// stnet: command-line entry point for slicing, corruption, model building,
// cost analysis, training, evaluation and report generation.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "run_config.hpp"
#include "stnet/analyzer.hpp"
#include "stnet/checkpoint.hpp"
#include "stnet/corruptions.hpp"
#include "stnet/datasets.hpp"
#include "stnet/harness.hpp"
#include "stnet/reports.hpp"
#include "stnet/slicer.hpp"
#include "stnet/zoo.hpp"

#ifndef STNET_VERSION
#define STNET_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace stnet;

namespace {

// Failures the user can fix by changing flags; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr const char* kModelHint =
    "expected a base model (VGG16, ResNet50, MobileNetV2, MiniVGG) or "
    "STNet{streams}_{scale}_{base}, e.g. STNet5_1.5_VGG16";

using Clock = std::chrono::steady_clock;

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json flags_of(const CLI::App& app) {
  json flags = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_name() == "--help" || opt->count() == 0) continue;
    const auto& res = opt->results();
    if (res.size() == 1) {
      flags[opt->get_name()] = res.front();
    } else {
      flags[opt->get_name()] = res;
    }
  }
  return flags;
}

void write_manifest(const fs::path& file, const CLI::App& app, json seeds,
                    const std::vector<std::string>& artifacts, Clock::time_point start,
                    json extra = json::object()) {
  json m;
  m["command"] = app.get_name();
  m["flags"] = flags_of(app);
  m["seeds"] = std::move(seeds);
  m["artifacts"] = artifacts;
  if (!extra.empty()) m["resolved"] = std::move(extra);
  m["tool_version"] = STNET_VERSION;
  m["started_utc"] = utc_now();
  m["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
  write_text(file, m.dump(2) + "\n");
}

ArchDescription resolve_model(const std::string& name, std::size_t classes) {
  try {
    return model_desc(name, classes);
  } catch (const std::invalid_argument& e) {
    throw UsageError("cannot parse model '" + name + "': " + e.what() + "; " + kModelHint);
  }
}

CorruptionKind resolve_kind(const std::string& name) {
  const auto kind = parse_corruption(name);
  if (!kind) {
    throw UsageError("unknown corruption kind '" + name + "'; valid kinds: " + corruption_names_list());
  }
  return *kind;
}

SliceMode resolve_mode(const std::string& name) {
  const auto mode = parse_slice_mode(name);
  if (!mode) throw UsageError("unknown slice mode '" + name + "' (pixel-luminance or per-channel)");
  return *mode;
}

// Raw planar R, G, B planes of height x width, or CIFAR records.
Image read_image_file(const fs::path& file, std::size_t index, std::size_t height, std::size_t width) {
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) throw std::runtime_error(file.string() + ": bad image file (not found)");
  const auto size = fs::file_size(file, ec);
  const std::size_t plane = height * width;
  if (size == 3 * plane) {
    const std::string bytes = read_text(file);
    Image img({height, width, 3});
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t c = 0; c < 3; ++c) img[3 * p + c] = static_cast<std::uint8_t>(bytes[c * plane + p]);
    return img;
  }
  if (size > 0 && size % kCifarRecordBytes == 0) {
    const LabeledImageSet set = read_cifar_records(file);
    if (index >= set.size()) throw std::runtime_error(file.string() + ": record index out of range");
    return set.image(index);
  }
  throw std::runtime_error(file.string() + ": bad image file (" + std::to_string(size) +
                           " bytes is neither a raw planar image nor CIFAR records)");
}

void write_planar(const Image& img, const fs::path& file) {
  const std::size_t plane = img.dim(0) * img.dim(1);
  std::string bytes(3 * plane, '\0');
  for (std::size_t p = 0; p < plane; ++p)
    for (std::size_t c = 0; c < 3; ++c) bytes[c * plane + p] = static_cast<char>(img[3 * p + c]);
  write_text(file, bytes);
}

TrainConfig train_config_from(const cli::RunConfig& cfg, std::size_t streams) {
  TrainConfig tc;
  tc.epochs = cfg.get_u64("epochs", tc.epochs);
  tc.batch_size = cfg.get_u64("batch", tc.batch_size);
  tc.optimizer.kind = parse_optimizer(cfg.get("optimizer", "sgd"));
  tc.optimizer.lr = cfg.get_double("lr", tc.optimizer.lr);
  tc.optimizer.momentum = cfg.get_double("momentum", tc.optimizer.momentum);
  tc.seed = cfg.get_u64("seed", 0);
  tc.precision = cfg.get("precision", "f32");
  tc.slice = make_spec(streams, resolve_mode(cfg.get("slice_mode", "pixel-luminance")));
  return tc;
}

cli::DataSource data_from(const cli::RunConfig& cfg) {
  cli::DataSource src = cli::load_data(cfg.get("data", ""), cfg.get_u64("synth_n", 2000),
                                       cfg.get_u64("synth_test_n", 1000), cfg.get_u64("data_seed", 0));
  const std::size_t train_size = cfg.get_u64("train_size", 0);
  const std::size_t test_size = cfg.get_u64("test_size", 0);
  if (train_size > 0 && train_size < src.train.size()) src.train = stratified_subset(src.train, train_size, 0);
  if (test_size > 0 && test_size < src.test.size()) src.test = stratified_subset(src.test, test_size, 0);
  return src;
}

SuiteConfig suite_from(const cli::RunConfig& cfg) {
  SuiteConfig suite;
  for (const std::string& k : cfg.get_list("kinds")) suite.kinds.push_back(resolve_kind(k));
  suite.severities.clear();
  for (const std::string& s : cfg.get_list("severities")) {
    const double v = std::stod(s);
    if (v < 1 || v > 5 || v != static_cast<int>(v)) throw UsageError("severity must be an integer in 1..5");
    suite.severities.push_back(static_cast<int>(v));
  }
  if (suite.severities.empty()) suite.severities = {3};
  suite.seed = cfg.get_u64("suite_seed", 0);
  return suite;
}

json seeds_of(const cli::RunConfig& cfg) {
  json s = json::object();
  for (const char* key : {"seed", "data_seed", "suite_seed", "split_seed"}) {
    s[key] = cfg.get_u64(key, 0);
  }
  return s;
}

cli::RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  cli::RunConfig cfg = path.empty() ? cli::RunConfig{} : cli::RunConfig::load(path);
  for (const std::string& o : overrides) cfg.set_assignment(o);
  return cfg;
}

json resolved(const cli::RunConfig& cfg) {
  json r = json::object();
  for (const auto& [k, v] : cfg.values()) r[k] = v;
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STNet toolkit: streaming networks over intensity slices"};
  app.require_subcommand(1);
  app.set_version_flag("--version", STNET_VERSION);
  const auto start = Clock::now();

  // slice
  auto* slice = app.add_subcommand("slice", "split an image into intensity slices");
  std::string slice_input, slice_out, slice_mode = "pixel-luminance";
  std::size_t slice_n = 5, slice_index = 0, slice_h = 32, slice_w = 32;
  bool check_partition = false;
  slice->add_option("--input", slice_input, "raw planar RGB image or CIFAR record file")->required();
  slice->add_option("--n", slice_n, "number of slices")->check(CLI::PositiveNumber);
  slice->add_option("--mode", slice_mode, "pixel-luminance | per-channel");
  slice->add_option("--out", slice_out, "output directory");
  slice->add_option("--index", slice_index, "record index for CIFAR record input");
  slice->add_option("--height", slice_h, "raw image height");
  slice->add_option("--width", slice_w, "raw image width");
  slice->add_flag("--check-partition", check_partition, "verify the slices sum to the input");

  // corrupt
  auto* corrupt = app.add_subcommand("corrupt", "apply a corruption to a record set");
  std::string c_kind, c_set, c_out;
  int c_severity = 1;
  std::uint64_t c_seed = 0;
  bool print_table = false;
  corrupt->add_option("--kind", c_kind, "corruption kind");
  corrupt->add_option("--severity", c_severity, "severity 1..5")->check(CLI::Range(1, 5));
  corrupt->add_option("--seed", c_seed, "seed for stochastic kinds");
  corrupt->add_option("--set", c_set, "input CIFAR-format record file");
  corrupt->add_option("--out", c_out, "output record file");
  corrupt->add_flag("--print-severity-table", print_table, "print the severity table as CSV");

  // build
  auto* build = app.add_subcommand("build", "build an initialized model");
  std::string b_model, b_out;
  std::size_t b_classes = 10;
  std::uint64_t b_seed = 0;
  bool b_dump = false;
  build->add_option("--model", b_model, "base model or STNet name")->required();
  build->add_option("--classes", b_classes, "classifier width");
  build->add_option("--seed", b_seed, "initialization seed");
  build->add_option("--out", b_out, "checkpoint path");
  build->add_flag("--dump", b_dump, "print the canonical architecture text");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "parameter and FLOPs accounting");
  std::string a_model, a_format = "md";
  std::size_t a_classes = 10;
  analyze_cmd->add_option("--model", a_model, "base model or STNet name")->required();
  analyze_cmd->add_option("--format", a_format, "csv | md")->check(CLI::IsMember({"csv", "md"}));
  analyze_cmd->add_option("--classes", a_classes, "classifier width");

  // train / eval share the config mechanism
  struct ConfigFlags {
    std::string config;
    std::vector<std::string> overrides;
  };
  auto add_config = [](CLI::App* sub, ConfigFlags& f) {
    sub->add_option("--config", f.config, "key = value configuration file");
    sub->add_option("--set", f.overrides, "key=value override (repeatable)");
  };
  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  ConfigFlags t_flags;
  add_config(train_cmd, t_flags);
  std::string t_model, t_data, t_out;
  train_cmd->add_option("--model", t_model, "overrides key model");
  train_cmd->add_option("--data", t_data, "overrides key data (directory or synth)");
  train_cmd->add_option("--out", t_out, "overrides key out (checkpoint path)");
  std::string t_lr, t_epochs, t_seed;
  train_cmd->add_option("--lr", t_lr, "overrides key lr");
  train_cmd->add_option("--epochs", t_epochs, "overrides key epochs");
  train_cmd->add_option("--seed", t_seed, "overrides key seed");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the corruption suite");
  ConfigFlags e_flags;
  add_config(eval_cmd, e_flags);
  std::string e_ckpt, e_out, e_data;
  eval_cmd->add_option("--checkpoint", e_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--out", e_out, "EvalReport CSV path")->required();
  eval_cmd->add_option("--data", e_data, "overrides key data");

  auto* report_cmd = app.add_subcommand("report", "join aug/no-aug reports into boosts and tables");
  std::vector<std::string> r_aug, r_noaug;
  std::string r_out;
  report_cmd->add_option("--aug", r_aug, "aug EvalReport CSV (repeatable)")->required();
  report_cmd->add_option("--noaug", r_noaug, "no-aug EvalReport CSV, paired with --aug")->required();
  report_cmd->add_option("--out-dir", r_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (slice->parsed()) {
      const Image img = read_image_file(slice_input, slice_index, slice_h, slice_w);
      const SliceSpec spec = make_spec(slice_n, resolve_mode(slice_mode));
      const std::vector<Image> slices = slice_image(img, spec);
      std::vector<std::string> artifacts;
      if (!slice_out.empty()) {
        fs::create_directories(slice_out);
        for (std::size_t k = 0; k < slices.size(); ++k) {
          const fs::path f = fs::path(slice_out) / ("slice_" + std::to_string(k) + ".raw");
          write_planar(slices[k], f);
          artifacts.push_back(f.string());
        }
        write_manifest(fs::path(slice_out) / "manifest.json", *slice, json::object(), artifacts, start);
      }
      if (check_partition) {
        for (std::size_t i = 0; i < img.size(); ++i) {
          unsigned sum = 0;
          for (const Image& s : slices) sum += s[i];
          if (sum != img[i]) {
            std::cerr << "partition check failed at element " << i << "\n";
            return 1;
          }
        }
        std::cout << "partition ok: " << slices.size() << " slices sum to the input\n";
      }
      return 0;
    }

    if (corrupt->parsed()) {
      if (print_table) {
        std::cout << severity_table_csv();
        return 0;
      }
      if (c_kind.empty() || c_set.empty() || c_out.empty()) {
        throw UsageError("corrupt needs --kind, --set and --out (or --print-severity-table)");
      }
      const Corruption c{resolve_kind(c_kind), c_severity, c_seed, std::nullopt};
      const LabeledImageSet in = read_cifar_records(c_set);
      write_cifar_records(corrupt_set(in, c), c_out);
      write_manifest(c_out + ".manifest.json", *corrupt, {{"seed", c_seed}}, {c_out}, start);
      return 0;
    }

    if (build->parsed()) {
      const ArchDescription desc = resolve_model(b_model, b_classes);
      if (b_dump) std::cout << serialize_arch(desc);
      if (!b_out.empty()) {
        const Graph<float> graph = compile<float>(desc, b_seed);
        save_checkpoint(graph, b_out);
        write_manifest(b_out + ".manifest.json", *build, {{"seed", b_seed}}, {b_out}, start);
      }
      return 0;
    }

    if (analyze_cmd->parsed()) {
      const ArchDescription desc = resolve_model(a_model, a_classes);
      if (a_format == "csv") {
        std::cout << cost_report_csv(analyze(desc));
      } else if (desc.streams > 1 || desc.joint) {
        std::cout << comparison_markdown({compare(parse_stnet_name(a_model), a_classes)});
      } else {
        const CostReport r = analyze(desc);
        std::cout << "| Name | FLOPs | Num of Params |\n|---|---|---|\n| " << r.model << " | "
                  << group_thousands(r.total_flops) << " | " << group_thousands(r.total_params)
                  << " |\n";
      }
      return 0;
    }

    if (train_cmd->parsed()) {
      cli::RunConfig cfg = load_config(t_flags.config, t_flags.overrides);
      if (!t_model.empty()) cfg.set("model", t_model);
      if (!t_data.empty()) cfg.set("data", t_data);
      if (!t_out.empty()) cfg.set("out", t_out);
      if (!t_lr.empty()) cfg.set("lr", t_lr);
      if (!t_epochs.empty()) cfg.set("epochs", t_epochs);
      if (!t_seed.empty()) cfg.set("seed", t_seed);
      const std::string out = cfg.require("out");
      const cli::DataSource data = data_from(cfg);
      const ArchDescription desc = resolve_model(cfg.require("model"), data.train.num_classes_seen());
      const TrainConfig tc = train_config_from(cfg, desc.streams);

      LabeledImageSet train_set = data.train;
      IdSet forbidden;
      const SuiteConfig suite = suite_from(cfg);
      if (!suite.kinds.empty()) {
        // Aug protocol: add the to_train half of each corrupted cell.
        std::vector<std::size_t> tr, te;
        split_indices(data.test.labels(), cfg.get_double("split_fraction", 0.5),
                      cfg.get_u64("split_seed", 0), true, tr, te);
        for (CorruptionKind kind : suite.kinds)
          for (int sev : suite.severities) {
            const Corruption c{kind, sev, suite_cell_seed(suite.seed, kind, sev), std::nullopt};
            train_set.append(corrupt_set(data.test, c).subset(tr));
          }
        forbidden = id_set(data.test.subset(te));
      } else {
        forbidden = id_set(data.test);
      }
      Graph<float> graph = compile<float>(desc, tc.seed);
      const TrainResult result = train(graph, train_set, tc, &forbidden);
      save_checkpoint(graph, out);
      const std::string history = cfg.get("history", out + ".history.csv");
      std::string csv = "epoch,loss\n";
      for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
        csv += std::to_string(e + 1) + "," + format_real(result.epoch_loss[e]) + "\n";
      }
      write_text(history, csv);
      json extra = resolved(cfg);
      extra["data_source"] = data.description;
      extra["train_images"] = train_set.size();
      write_manifest(out + ".manifest.json", *train_cmd, seeds_of(cfg), {out, history}, start, extra);
      std::cout << desc.name << ": " << result.steps << " steps, final epoch loss "
                << format_fixed(result.epoch_loss.back(), 4) << "\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      cli::RunConfig cfg = load_config(e_flags.config, e_flags.overrides);
      if (!e_data.empty()) cfg.set("data", e_data);
      if (!fs::exists(e_ckpt)) throw std::runtime_error(e_ckpt + ": checkpoint not found");
      Graph<float> graph = load_checkpoint(e_ckpt);
      const ArchDescription desc = parse_arch(graph.arch_text());
      const cli::DataSource data = data_from(cfg);
      const SuiteConfig suite = suite_from(cfg);
      const std::string protocol = cfg.get("protocol", "no-aug");
      const SliceSpec spec =
          make_spec(graph.num_inputs(), resolve_mode(cfg.get("slice_mode", "pixel-luminance")));
      EvalReport report;
      if (cfg.get("eval_split", protocol == "aug" ? "half" : "full") == "half") {
        std::vector<std::size_t> tr, te;
        split_indices(data.test.labels(), cfg.get_double("split_fraction", 0.5),
                      cfg.get_u64("split_seed", 0), true, tr, te);
        report = {desc.name, protocol, {}};
        const LabeledImageSet clean_half = data.test.subset(te);
        const EvalCounts clean = evaluate_counts(graph, clean_half, spec);
        report.rows.push_back({"clean", 0, clean.total, clean.correct});
        for (CorruptionKind kind : suite.kinds)
          for (int sev : suite.severities) {
            const Corruption c{kind, sev, suite_cell_seed(suite.seed, kind, sev), std::nullopt};
            const EvalCounts n = evaluate_counts(graph, corrupt_set(data.test, c).subset(te), spec);
            report.rows.push_back({std::string(corruption_name(kind)), sev, n.total, n.correct});
          }
      } else {
        report = eval_corruption_suite(graph, desc.name, data.test, suite, spec, protocol);
      }
      write_text(e_out, eval_report_csv(report));
      json extra = resolved(cfg);
      extra["data_source"] = data.description;
      write_manifest(e_out + ".manifest.json", *eval_cmd, seeds_of(cfg), {e_out}, start, extra);
      std::cout << desc.name << " clean " << format_fixed(report.clean_accuracy(), 4) << ", mean corrupted "
                << format_fixed(report.mean_corrupted_accuracy(), 4) << "\n";
      return 0;
    }

    if (report_cmd->parsed()) {
      if (r_aug.size() != r_noaug.size()) throw UsageError("--aug and --noaug must be given in pairs");
      std::vector<EvalReport> reports;
      std::vector<BoostReport> boosts;
      for (std::size_t i = 0; i < r_aug.size(); ++i) {
        EvalReport aug = read_eval_report(r_aug[i]);
        EvalReport noaug = read_eval_report(r_noaug[i]);
        boosts.push_back(augmentation_boost(aug, noaug));
        reports.push_back(std::move(noaug));
        reports.push_back(std::move(aug));
      }
      fs::create_directories(r_out);
      const fs::path boost_file = fs::path(r_out) / "boost.csv";
      const fs::path tables = fs::path(r_out) / "tables.md";
      write_text(boost_file, boost_csv(boosts));
      write_text(tables, "## Accuracy\n\n" + accuracy_markdown(reports) + "\n## Augmentation boost\n\n" +
                             boost_markdown(boosts));
      write_manifest(fs::path(r_out) / "manifest.json", *report_cmd, json::object(),
                     {boost_file.string(), tables.string()}, start);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "stnet: " << e.what() << "\n";
    return 2;
  } catch (const cli::ConfigError& e) {
    std::cerr << "stnet: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "stnet: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
