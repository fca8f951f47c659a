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

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stnet {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// kind "clean" with severity 0 is the uncorrupted test set. Severity 0 on
// another kind means the source did not state one.
struct EvalRow {
  std::string kind;
  int severity = 0;
  std::size_t n = 0;
  std::size_t correct = 0;

  double accuracy() const;
};

struct EvalReport {
  std::string model;
  std::string protocol;  // "no-aug" or "aug"
  std::vector<EvalRow> rows;

  const EvalRow* find(std::string_view kind, int severity) const;
  // Accuracy of the clean row; throws ReportError if absent.
  double clean_accuracy() const;
  // Unweighted mean over non-clean rows; 0 rows gives 0.
  double mean_corrupted_accuracy() const;
};

// model,protocol,kind,severity,n,accuracy with one line per row and a
// trailing "mean" line (unweighted over corruption rows).
std::string eval_report_csv(const EvalReport& report);
void write_text(const std::filesystem::path& file, std::string_view text);
std::string read_text(const std::filesystem::path& file);

// Parses one or more reports (grouped by model and protocol, in order of
// first appearance). "mean" lines are skipped; correct = round(acc * n).
std::vector<EvalReport> parse_eval_reports(std::string_view csv);
EvalReport read_eval_report(const std::filesystem::path& file);

struct BoostRow {
  std::string kind;
  int severity = 0;
  double boost = 0.0;
};

struct BoostReport {
  std::string model;
  std::vector<BoostRow> rows;
};

// model,kind,severity,boost with boost printed to 3 decimals.
std::string boost_csv(const std::vector<BoostReport>& reports);

// Noise types down the side, one accuracy column per report.
std::string accuracy_markdown(const std::vector<EvalReport>& reports);
std::string boost_markdown(const std::vector<BoostReport>& reports);

std::string format_fixed(double value, int digits);

}  // namespace stnet
