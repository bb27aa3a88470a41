// Copyright 2026 The zsner Authors. All Rights Reserved.
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

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "zsner/error.h"
#include "zsner/evaluator.h"

namespace zsner {
namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * v);
  return buf;
}

std::string pad(const std::string& s, size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string epoch_text(const std::optional<int32_t>& e) {
  return e ? std::to_string(*e) : "-";
}

nlohmann::ordered_json prf_json(const PRF& p) {
  return {{"f1", std::round(p.f1 * 10000.0) / 100.0},
          {"precision", std::round(p.precision * 10000.0) / 100.0},
          {"recall", std::round(p.recall * 10000.0) / 100.0},
          {"tp", p.counts.tp},
          {"fp", p.counts.fp},
          {"fn", p.counts.fn}};
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "text") return ReportFormat::kText;
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "jsonl") return ReportFormat::kJsonl;
  throw UsageError("unknown report format '" + std::string(text) +
                   "' (expected text, csv or jsonl)");
}

std::string format_cell(const PRF& prf) {
  return percent(prf.f1) + " (" + percent(prf.precision) + "," + percent(prf.recall) + ")";
}

std::vector<int32_t> MetricsReport::ks() const {
  std::set<int32_t> ks;
  for (const auto& r : rows) ks.insert(r.k);
  return {ks.begin(), ks.end()};
}

std::vector<std::string> MetricsReport::classes() const {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.class_name) == out.end()) {
      out.push_back(r.class_name);
    }
  }
  return out;
}

std::vector<MetricsRow> MetricsReport::average_rows() const {
  std::vector<MetricsRow> out;
  for (int32_t k : ks()) {
    MetricsRow avg;
    avg.class_name = "Average";
    avg.k = k;
    int32_t n = 0;
    int32_t epoch_n = 0;
    double epoch_sum = 0.0;
    for (const auto& r : rows) {
      if (r.k != k) continue;
      ++n;
      avg.token.precision += r.token.precision;
      avg.token.recall += r.token.recall;
      avg.token.f1 += r.token.f1;
      avg.token.counts += r.token.counts;
      avg.span.precision += r.span.precision;
      avg.span.recall += r.span.recall;
      avg.span.f1 += r.span.f1;
      avg.span.counts += r.span.counts;
      avg.examples += r.examples;
      if (r.best_epoch) {
        epoch_sum += *r.best_epoch;
        ++epoch_n;
      }
    }
    for (PRF* p : {&avg.token, &avg.span}) {
      p->precision /= n;
      p->recall /= n;
      p->f1 /= n;
    }
    if (epoch_n > 0) avg.best_epoch = static_cast<int32_t>(std::lround(epoch_sum / epoch_n));
    out.push_back(avg);
  }
  return out;
}

std::string MetricsReport::render(ReportFormat format) const {
  const auto k_list = ks();
  const auto averages = average_rows();
  std::vector<MetricsRow> all = rows;
  all.insert(all.end(), averages.begin(), averages.end());
  std::ostringstream out;

  if (format == ReportFormat::kCsv) {
    out << "class,k,epoch,examples,f1,precision,recall,span_f1,span_precision,"
           "span_recall\n";
    for (const auto& r : all) {
      out << csv_field(r.class_name) << ',' << r.k << ','
          << (r.best_epoch ? std::to_string(*r.best_epoch) : "") << ',' << r.examples
          << ',' << percent(r.token.f1) << ',' << percent(r.token.precision) << ','
          << percent(r.token.recall) << ',' << percent(r.span.f1) << ','
          << percent(r.span.precision) << ',' << percent(r.span.recall) << '\n';
    }
    return out.str();
  }

  if (format == ReportFormat::kJsonl) {
    nlohmann::ordered_json meta = {{"type", "meta"},
                                   {"variant", variant},
                                   {"base_config", nlohmann::ordered_json::parse(base_config.dump())},
                                   {"ks", k_list}};
    out << meta.dump() << '\n';
    for (const auto& r : all) {
      nlohmann::ordered_json j = {{"type", r.class_name == "Average" ? "average" : "row"},
                                  {"class", r.class_name},
                                  {"k", r.k}};
      j["epoch"] = nullptr;
      if (r.best_epoch) j["epoch"] = *r.best_epoch;
      j["examples"] = r.examples;
      j["word"] = prf_json(r.token);
      j["span"] = prf_json(r.span);
      out << j.dump() << '\n';
    }
    return out.str();
  }

  size_t name_width = 7;
  for (const auto& r : all) name_width = std::max(name_width, r.class_name.size());
  name_width += 2;
  constexpr size_t kCellWidth = 24;
  auto table = [&](const char* title, PRF MetricsRow::*metric) {
    out << title << '\n';
    out << pad("Class", name_width) << pad("Epoch", 7);
    for (int32_t k : k_list) out << pad(std::to_string(k), kCellWidth);
    out << '\n';
    auto emit = [&](const std::string& name, const std::vector<MetricsRow>& source) {
      std::optional<int32_t> epoch;
      std::map<int32_t, const MetricsRow*> by_k;
      for (const auto& r : source) {
        if (r.class_name != name) continue;
        by_k[r.k] = &r;
        if (!epoch) epoch = r.best_epoch;
      }
      out << pad(name, name_width) << pad(epoch_text(epoch), 7);
      for (int32_t k : k_list) {
        auto it = by_k.find(k);
        out << pad(it == by_k.end() ? "-" : format_cell(it->second->*metric), kCellWidth);
      }
      out << '\n';
    };
    for (const auto& name : classes()) emit(name, rows);
    emit("Average", averages);
  };
  out << "Variant: " << (variant.empty() ? "-" : variant) << '\n';
  out << "Columns: number of supporting examples k; cells F1 (precision,recall) in %\n\n";
  table("Word-level", &MetricsRow::token);
  out << '\n';
  table("Exact-span", &MetricsRow::span);
  return out.str();
}

}  // namespace zsner
