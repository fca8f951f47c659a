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

#include "stnet/reports.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "stnet/arch.hpp"

namespace stnet {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ReportError("line " + std::to_string(line) + ": bad number '" + text + "'");
  }
  return value;
}

std::string row_label(const EvalRow& r) {
  std::string label = r.kind;
  for (char& c : label) {
    if (c == '-') c = ' ';
  }
  if (r.severity > 0) label += " (s" + std::to_string(r.severity) + ")";
  return label;
}

}  // namespace

double EvalRow::accuracy() const {
  if (n == 0) throw ReportError("row '" + kind + "' has no samples");
  return static_cast<double>(correct) / static_cast<double>(n);
}

const EvalRow* EvalReport::find(std::string_view kind, int severity) const {
  for (const EvalRow& r : rows) {
    if (r.kind == kind && r.severity == severity) return &r;
  }
  return nullptr;
}

double EvalReport::clean_accuracy() const {
  const EvalRow* r = find("clean", 0);
  if (r == nullptr) throw ReportError("report for " + model + " has no clean row");
  return r->accuracy();
}

double EvalReport::mean_corrupted_accuracy() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const EvalRow& r : rows) {
    if (r.kind == "clean") continue;
    sum += r.accuracy();
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

std::string eval_report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "model,protocol,kind,severity,n,accuracy\n";
  std::size_t total = 0;
  std::size_t corrupted = 0;
  for (const EvalRow& r : report.rows) {
    out << report.model << ',' << report.protocol << ',' << r.kind << ',' << r.severity << ','
        << r.n << ',' << format_real(r.accuracy()) << '\n';
    if (r.kind != "clean") {
      total += r.n;
      ++corrupted;
    }
  }
  if (corrupted > 0) {
    out << report.model << ',' << report.protocol << ",mean,0," << total << ','
        << format_real(report.mean_corrupted_accuracy()) << '\n';
  }
  return out.str();
}

void write_text(const fs::path& file, std::string_view text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ReportError(file.string() + ": cannot open for writing");
  out << text;
  if (!out) throw ReportError(file.string() + ": write failed");
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ReportError(file.string() + ": cannot open");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<EvalReport> parse_eval_reports(std::string_view csv) {
  std::vector<EvalReport> reports;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool header = true;
  while (start < csv.size()) {
    std::size_t end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != "model,protocol,kind,severity,n,accuracy") {
        throw ReportError("unexpected report header '" + std::string(line) + "'");
      }
      header = false;
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != 6) {
      throw ReportError("line " + std::to_string(line_no) + ": expected 6 columns");
    }
    if (cells[2] == "mean") continue;
    EvalRow row;
    row.kind = cells[2];
    row.severity = parse_number<int>(cells[3], line_no);
    row.n = parse_number<std::size_t>(cells[4], line_no);
    const double acc = parse_number<double>(cells[5], line_no);
    if (row.n == 0 || !(acc >= 0.0 && acc <= 1.0)) {
      throw ReportError("line " + std::to_string(line_no) + ": accuracy or n out of range");
    }
    row.correct = static_cast<std::size_t>(std::llround(acc * static_cast<double>(row.n)));
    const auto key = std::make_pair(cells[0], cells[1]);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, reports.size()).first;
      reports.push_back({cells[0], cells[1], {}});
    }
    reports[it->second].rows.push_back(std::move(row));
  }
  if (header) throw ReportError("empty report");
  return reports;
}

EvalReport read_eval_report(const fs::path& file) {
  auto reports = parse_eval_reports(read_text(file));
  if (reports.size() != 1) {
    throw ReportError(file.string() + ": expected one report, found " +
                      std::to_string(reports.size()));
  }
  return std::move(reports.front());
}

std::string boost_csv(const std::vector<BoostReport>& reports) {
  std::ostringstream out;
  out << "model,kind,severity,boost\n";
  for (const BoostReport& b : reports) {
    for (const BoostRow& r : b.rows) {
      out << b.model << ',' << r.kind << ',' << r.severity << ',' << format_fixed(r.boost, 3) << '\n';
    }
  }
  return out.str();
}

std::string accuracy_markdown(const std::vector<EvalReport>& reports) {
  if (reports.empty()) return {};
  std::ostringstream out;
  out << "| Noise type |";
  for (const EvalReport& r : reports) out << ' ' << r.model << " (" << r.protocol << ") |";
  out << "\n|---|";
  for (std::size_t i = 0; i < reports.size(); ++i) out << "---|";
  out << '\n';
  for (const EvalRow& row : reports.front().rows) {
    out << "| " << row_label(row) << " |";
    for (const EvalReport& r : reports) {
      const EvalRow* match = r.find(row.kind, row.severity);
      out << ' ' << (match ? format_fixed(match->accuracy(), 3) : std::string("-")) << " |";
    }
    out << '\n';
  }
  out << "| mean corrupted |";
  for (const EvalReport& r : reports) out << ' ' << format_fixed(r.mean_corrupted_accuracy(), 3) << " |";
  out << '\n';
  return out.str();
}

std::string boost_markdown(const std::vector<BoostReport>& reports) {
  if (reports.empty()) return {};
  std::ostringstream out;
  out << "| Noise type |";
  for (const BoostReport& r : reports) out << ' ' << r.model << " boost |";
  out << "\n|---|";
  for (std::size_t i = 0; i < reports.size(); ++i) out << "---|";
  out << '\n';
  for (const BoostRow& row : reports.front().rows) {
    out << "| " << row_label({row.kind, row.severity, 1, 0}) << " |";
    for (const BoostReport& r : reports) {
      std::string cell = "-";
      for (const BoostRow& b : r.rows) {
        if (b.kind == row.kind && b.severity == row.severity) cell = format_fixed(b.boost, 3);
      }
      out << ' ' << cell << " |";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace stnet
