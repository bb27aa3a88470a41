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

#ifndef ZSNER_EVALUATOR_H_
#define ZSNER_EVALUATOR_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsner/encoder.h"
#include "zsner/prompt.h"
#include "zsner/subword.h"

namespace zsner {

// Half-open word-index range [first, second).
using WordRange = std::pair<int32_t, int32_t>;

struct PredictionRecord {
  Origin origin;
  std::string query_class;
  std::vector<int32_t> gold;
  std::vector<int32_t> predicted;
  std::vector<WordRange> spans;  // reconstructed from `predicted`
};

struct PredictOptions {
  EncodeOptions encode;
  int32_t batch_size = 64;
  // Batches are fixed by index, so results do not depend on the thread count.
  int32_t threads = 1;
};

std::vector<PredictionRecord> predict(const Model& model,
                                      const std::vector<PromptExample>& examples,
                                      const Vocab& vocab,
                                      const PredictOptions& options = {});

struct Counts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Counts counts;
};

PRF prf_from_counts(const Counts& counts);

Counts token_counts(std::span<const int32_t> gold, std::span<const int32_t> predicted);
// Word-level micro P/R/F1 on the positive class.
PRF token_prf(std::span<const PredictionRecord> records);

// Maximal runs of positive labels, sorted.
std::vector<WordRange> reconstruct_spans(std::span<const int32_t> labels);
std::vector<WordRange> reconstruct_spans(const PredictionRecord& record);
// Exact-match spans: a predicted run counts only if it equals a gold run.
PRF span_prf(std::span<const PredictionRecord> records);

// Multi-class head predictions, one record per class id > 0, so that the
// binary metrics above apply unchanged.
std::vector<PredictionRecord> predict_multiclass(
    const Model& model, const MultiClassDataset& dataset, const Vocab& vocab,
    const PredictOptions& options = {});

// Unweighted mean of per-class word-level F1 (classes in sorted order).
double macro_f1(std::span<const PredictionRecord> records);

void write_predictions(std::span<const PredictionRecord> records, std::ostream& out);

struct MetricsRow {
  std::string class_name;
  int32_t k = 0;
  PRF token;
  PRF span;
  std::optional<int32_t> best_epoch;
  int64_t examples = 0;
};

enum class ReportFormat { kText, kCsv, kJsonl };
ReportFormat parse_report_format(std::string_view text);

struct MetricsReport {
  std::string variant;
  nlohmann::json base_config = nlohmann::json::object();
  std::vector<MetricsRow> rows;

  std::vector<int32_t> ks() const;
  std::vector<std::string> classes() const;
  // Unweighted mean over classes for each k; best epoch is the rounded mean.
  std::vector<MetricsRow> average_rows() const;

  std::string render(ReportFormat format) const;
};

// "83.16 (88.27,78.61)": F1, precision, recall in percent.
std::string format_cell(const PRF& prf);

struct FineTuneOptions;

struct ProtocolInputs {
  const Model* zero_shot = nullptr;
  std::optional<int32_t> best_epoch;
  std::vector<PromptExample> few_shot_pool;
  std::vector<PromptExample> test;
  std::string unseen;
  std::vector<int32_t> ks = {0, 1, 10, 100};
};

// k = 0 scores the zero-shot model; each k > 0 fine-tunes an independent copy
// on k shots drawn from the pool.
std::vector<MetricsRow> evaluate_protocol(const ProtocolInputs& inputs,
                                          const Vocab& vocab,
                                          const FineTuneOptions& fine_tune,
                                          const PredictOptions& predict_options,
                                          uint64_t seed);

}  // namespace zsner

#endif  // ZSNER_EVALUATOR_H_
