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

#include "zsner/evaluator.h"

#include <algorithm>
#include <map>
#include <ostream>
#include <thread>

#include "zsner/error.h"
#include "zsner/trainer.h"

namespace zsner {
namespace {

std::string origin_label(const Origin& origin) {
  return origin.doc_id + "#" + std::to_string(origin.sent_index);
}

// Runs `fn(batch_index)` over [0, batches) on up to `threads` workers.
template <typename Fn>
void for_each_batch(size_t batches, int32_t threads, Fn fn) {
  const size_t workers = std::min<size_t>(std::max(threads, 1), batches);
  if (workers <= 1) {
    for (size_t b = 0; b < batches; ++b) fn(b);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (size_t b = w; b < batches; b += workers) fn(b);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Argmax label per position of every encoded example, padded with 0 to the
// example's full length.
std::vector<std::vector<int32_t>> predict_positions(
    const Model& model, const std::vector<EncodedExample>& encoded,
    const PredictOptions& options) {
  std::vector<std::vector<int32_t>> out(encoded.size());
  const size_t bs = static_cast<size_t>(std::max(options.batch_size, 1));
  const size_t batches = (encoded.size() + bs - 1) / bs;
  for_each_batch(batches, options.threads, [&](size_t b) {
    const size_t begin = b * bs;
    const size_t end = std::min(encoded.size(), begin + bs);
    std::vector<const EncodedExample*> ptrs;
    for (size_t i = begin; i < end; ++i) ptrs.push_back(&encoded[i]);
    const Batch batch = Batch::stack(std::span<const EncodedExample* const>(ptrs));
    const auto labels = argmax_labels(forward(model, batch));
    for (size_t i = begin; i < end; ++i) {
      auto& row = out[i];
      row.assign(encoded[i].length(), 0);
      const auto offset = static_cast<size_t>(i - begin) * batch.length;
      std::copy_n(labels.begin() + offset, batch.length, row.begin());
    }
  });
  return out;
}

}  // namespace

std::vector<PredictionRecord> predict(const Model& model,
                                      const std::vector<PromptExample>& examples,
                                      const Vocab& vocab,
                                      const PredictOptions& options) {
  std::vector<EncodedExample> encoded;
  encoded.reserve(examples.size());
  for (const auto& ex : examples) {
    try {
      encoded.push_back(encode(ex, vocab, options.encode));
    } catch (const DataError& e) {
      throw DataError(origin_label(ex.origin) + " [" + ex.query_class + "]: " + e.what());
    }
  }
  const auto positions = predict_positions(model, encoded, options);
  std::vector<PredictionRecord> records;
  records.reserve(examples.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    PredictionRecord r;
    r.origin = examples[i].origin;
    r.query_class = examples[i].query_class;
    r.gold = examples[i].sentence_labels();
    r.predicted = align_predictions(positions[i], encoded[i]);
    for (auto& p : r.predicted) p = p == 1 ? 1 : 0;
    r.spans = reconstruct_spans(r.predicted);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PredictionRecord> predict_multiclass(const Model& model,
                                                 const MultiClassDataset& dataset,
                                                 const Vocab& vocab,
                                                 const PredictOptions& options) {
  std::vector<EncodedExample> encoded;
  encoded.reserve(dataset.examples.size());
  for (const auto& ex : dataset.examples) {
    try {
      encoded.push_back(encode_multiclass(ex, vocab, options.encode));
    } catch (const DataError& e) {
      throw DataError(origin_label(ex.origin) + ": " + e.what());
    }
  }
  const auto positions = predict_positions(model, encoded, options);
  std::vector<PredictionRecord> records;
  for (size_t i = 0; i < dataset.examples.size(); ++i) {
    const auto words = align_predictions(positions[i], encoded[i]);
    const auto& gold = dataset.examples[i].word_labels;
    for (int32_t c = 1; c < dataset.classes.size(); ++c) {
      PredictionRecord r;
      r.origin = dataset.examples[i].origin;
      r.query_class = dataset.classes.name(c);
      for (size_t w = 0; w < words.size(); ++w) {
        r.gold.push_back(gold[w] == c ? 1 : 0);
        r.predicted.push_back(words[w] == c ? 1 : 0);
      }
      r.spans = reconstruct_spans(r.predicted);
      records.push_back(std::move(r));
    }
  }
  return records;
}

PRF prf_from_counts(const Counts& c) {
  PRF out;
  out.counts = c;
  if (c.tp + c.fp > 0) out.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
  if (c.tp + c.fn > 0) out.recall = static_cast<double>(c.tp) / (c.tp + c.fn);
  // Equal to 2PR/(P+R), without the extra rounding.
  if (c.tp > 0) out.f1 = 2.0 * c.tp / (2.0 * c.tp + c.fp + c.fn);
  return out;
}

Counts token_counts(std::span<const int32_t> gold, std::span<const int32_t> predicted) {
  if (gold.size() != predicted.size()) {
    throw DataError("gold has " + std::to_string(gold.size()) +
                    " words but prediction has " + std::to_string(predicted.size()));
  }
  Counts c;
  for (size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] == 1;
    const bool p = predicted[i] == 1;
    c.tp += g && p;
    c.fp += !g && p;
    c.fn += g && !p;
  }
  return c;
}

PRF token_prf(std::span<const PredictionRecord> records) {
  Counts total;
  for (const auto& r : records) total += token_counts(r.gold, r.predicted);
  return prf_from_counts(total);
}

std::vector<WordRange> reconstruct_spans(std::span<const int32_t> labels) {
  std::vector<WordRange> spans;
  const auto n = static_cast<int32_t>(labels.size());
  for (int32_t i = 0; i < n;) {
    if (labels[i] != 1) {
      ++i;
      continue;
    }
    int32_t j = i;
    while (j < n && labels[j] == 1) ++j;
    spans.emplace_back(i, j);
    i = j;
  }
  return spans;
}

std::vector<WordRange> reconstruct_spans(const PredictionRecord& record) {
  return reconstruct_spans(record.predicted);
}

PRF span_prf(std::span<const PredictionRecord> records) {
  Counts total;
  for (const auto& r : records) {
    const auto gold = reconstruct_spans(r.gold);
    const auto pred = reconstruct_spans(r.predicted);
    int64_t matched = 0;
    for (const auto& s : pred) {
      matched += std::binary_search(gold.begin(), gold.end(), s) ? 1 : 0;
    }
    total.tp += matched;
    total.fp += static_cast<int64_t>(pred.size()) - matched;
    total.fn += static_cast<int64_t>(gold.size()) - matched;
  }
  return prf_from_counts(total);
}

double macro_f1(std::span<const PredictionRecord> records) {
  std::map<std::string, Counts> by_class;
  for (const auto& r : records) by_class[r.query_class] += token_counts(r.gold, r.predicted);
  if (by_class.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [name, counts] : by_class) sum += prf_from_counts(counts).f1;
  return sum / static_cast<double>(by_class.size());
}

void write_predictions(std::span<const PredictionRecord> records, std::ostream& out) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["origin"] = {{"doc_id", r.origin.doc_id}, {"sent_index", r.origin.sent_index}};
    j["query_class"] = r.query_class;
    j["gold"] = r.gold;
    j["predicted"] = r.predicted;
    auto spans = nlohmann::ordered_json::array();
    for (const auto& [a, b] : r.spans) spans.push_back({a, b});
    j["spans"] = spans;
    out << j.dump() << '\n';
  }
}

std::vector<MetricsRow> evaluate_protocol(const ProtocolInputs& inputs,
                                          const Vocab& vocab,
                                          const FineTuneOptions& fine_tune,
                                          const PredictOptions& predict_options,
                                          uint64_t seed) {
  if (inputs.zero_shot == nullptr) throw UsageError("no zero-shot model given");
  std::vector<PromptExample> test;
  for (const auto& ex : inputs.test) {
    if (ex.query_class == inputs.unseen) test.push_back(ex);
  }
  if (test.empty()) {
    throw DataError("test split has no examples of class '" + inputs.unseen + "'");
  }
  std::vector<PromptExample> pool;
  for (const auto& ex : inputs.few_shot_pool) {
    if (ex.query_class == inputs.unseen) pool.push_back(ex);
  }
  std::vector<MetricsRow> rows;
  for (int32_t k : inputs.ks) {
    if (k < 0) throw UsageError("k must be non-negative");
    std::vector<PredictionRecord> records;
    if (k == 0) {
      records = predict(*inputs.zero_shot, test, vocab, predict_options);
    } else {
      const auto shots = sample_few_shot(pool, k, seed);
      FineTuneOptions opts = fine_tune;
      opts.seed = seed;
      const auto tuned = fine_tune_few_shot(*inputs.zero_shot, shots, vocab, opts);
      records = predict(tuned.model, test, vocab, predict_options);
    }
    MetricsRow row;
    row.class_name = inputs.unseen;
    row.k = k;
    row.token = token_prf(records);
    row.span = span_prf(records);
    row.best_epoch = inputs.best_epoch;
    row.examples = static_cast<int64_t>(records.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace zsner
