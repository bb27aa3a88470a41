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

#include <doctest.h>

#include <sstream>

#include "test_util.h"
#include "zsner/error.h"
#include "zsner/evaluator.h"
#include "zsner/prompt.h"
#include "zsner/subword.h"
#include "zsner/synthetic.h"
#include "zsner/trainer.h"

namespace zsner {
namespace {

PredictionRecord record(const std::string& cls, std::vector<int32_t> gold,
                        std::vector<int32_t> predicted) {
  PredictionRecord r;
  r.query_class = cls;
  r.gold = std::move(gold);
  r.predicted = std::move(predicted);
  r.spans = reconstruct_spans(r.predicted);
  return r;
}

TEST_CASE("token prf hand examples") {
  const std::vector<PredictionRecord> same = {record("A", {0, 1, 1, 0}, {0, 1, 1, 0})};
  const auto perfect = token_prf(same);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const std::vector<PredictionRecord> half = {record("A", {1, 1, 0, 0}, {1, 0, 1, 0})};
  const auto p = token_prf(half);
  CHECK(p.counts == Counts{1, 1, 1});
  CHECK(p.precision == 0.5);
  CHECK(p.recall == 0.5);
  CHECK(p.f1 == 0.5);

  const std::vector<PredictionRecord> none = {record("A", {1, 0, 1, 0}, {0, 0, 0, 0})};
  const auto z = token_prf(none);
  CHECK(z.precision == 0.0);
  CHECK(z.recall == 0.0);
  CHECK(z.f1 == 0.0);
  CHECK_THROWS_AS(token_counts(std::vector<int32_t>{1, 0}, std::vector<int32_t>{1}), DataError);
}

TEST_CASE("token prf pools counts across records") {
  const std::vector<PredictionRecord> records = {record("A", {1, 1}, {1, 0}),
                                                 record("A", {0, 0, 1}, {1, 1, 1})};
  const auto p = token_prf(records);
  CHECK(p.counts == Counts{2, 2, 1});
  CHECK(p.precision == doctest::Approx(0.5));
  CHECK(p.recall == doctest::Approx(2.0 / 3));
  CHECK(p.f1 == doctest::Approx(2 * 0.5 * (2.0 / 3) / (0.5 + 2.0 / 3)));
}

TEST_CASE("span reconstruction") {
  CHECK(reconstruct_spans(std::vector<int32_t>{0, 1, 1, 0, 1}) ==
        std::vector<WordRange>{{1, 3}, {4, 5}});
  CHECK(reconstruct_spans(std::vector<int32_t>{0, 0, 0}).empty());
  CHECK(reconstruct_spans(std::vector<int32_t>{1, 1, 1, 1}) == std::vector<WordRange>{{0, 4}});
  CHECK(reconstruct_spans(std::vector<int32_t>{}).empty());
}

TEST_CASE("exact span matching") {
  const std::vector<PredictionRecord> records = {record("A", {0, 1, 1, 0, 1}, {0, 1, 0, 0, 1})};
  const auto p = span_prf(records);
  // Gold runs (1,3),(4,5); predicted (1,2),(4,5).
  CHECK(p.counts == Counts{1, 1, 1});
  CHECK(p.f1 == 0.5);
}

TEST_CASE("macro f1 averages classes") {
  const std::vector<PredictionRecord> records = {record("A", {1, 0}, {1, 0}),
                                                 record("B", {1, 1}, {0, 0})};
  CHECK(macro_f1(records) == doctest::Approx(0.5));
}

TEST_CASE("cell format") {
  PRF p;
  p.f1 = 0.8316;
  p.precision = 0.8827;
  p.recall = 0.7861;
  CHECK(format_cell(p) == "83.16 (88.27,78.61)");
}

TEST_CASE("report renderings") {
  MetricsReport report;
  report.variant = "label_negative";
  auto row = [](const std::string& cls, int k, double f1, double p, double r) {
    MetricsRow m;
    m.class_name = cls;
    m.k = k;
    m.token.f1 = f1;
    m.token.precision = p;
    m.token.recall = r;
    m.best_epoch = 2;
    m.examples = 5;
    return m;
  };
  report.rows = {row("Disease", 0, 0.5, 0.6, 0.4), row("Disease", 10, 0.9, 0.9, 0.9),
                 row("Drug", 0, 0.3, 0.2, 0.6), row("Drug", 10, 0.7, 0.8, 0.6)};
  CHECK(report.ks() == std::vector<int32_t>{0, 10});
  CHECK(report.classes() == std::vector<std::string>{"Disease", "Drug"});
  const auto avg = report.average_rows();
  REQUIRE(avg.size() == 2);
  CHECK(avg[0].class_name == "Average");
  CHECK(avg[0].token.f1 == doctest::Approx(0.4));
  CHECK(avg[0].token.precision == doctest::Approx(0.4));
  CHECK(avg[0].token.recall == doctest::Approx(0.5));

  const auto text = report.render(ReportFormat::kText);
  CHECK(text.find("50.00 (60.00,40.00)") != std::string::npos);
  CHECK(text.find("Average") != std::string::npos);
  const auto csv = report.render(ReportFormat::kCsv);
  CHECK(csv.rfind("class,k,epoch,examples,f1,precision,recall,span_f1,span_precision,span_recall\n", 0) == 0);
  std::istringstream lines(report.render(ReportFormat::kJsonl));
  int count = 0;
  for (std::string line; std::getline(lines, line);) {
    CHECK(nlohmann::json::parse(line).is_object());
    ++count;
  }
  CHECK(count == 1 + 4 + 2);
  CHECK(parse_report_format("csv") == ReportFormat::kCsv);
  CHECK_THROWS_AS(parse_report_format("xml"), UsageError);
}

struct Tiny {
  SyntheticSpec spec = [] {
    SyntheticSpec s;
    s.sentence_count = 8;
    s.max_sentences_per_document = 1;
    s.classes = {{"Chemical", {PatternElement::literal({"aspirin", "lithium"})}},
                 {"Disease", {PatternElement::literal({"fever", "asthma"})}}};
    s.datasets = {{"cdr", {"Chemical", "Disease"}, {"Treatment with <Chemical> caused <Disease> ."}}};
    return s;
  }();
  Vocab vocab = build_vocab(synthetic_words(spec), 150);
  std::vector<PromptExample> examples =
      expand_corpus(split_corpus(generate_synthetic(spec)), LabelVariant::kLabelAsNegative);
  Model model = init_model(ModelConfig{.vocab_size = vocab.size(), .hidden_dim = 16, .ffn_dim = 32, .max_seq_len = 32});
};

TEST_CASE("predict shape contract") {
  Tiny t;
  const auto records = predict(t.model, t.examples, t.vocab);
  REQUIRE(records.size() == t.examples.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].gold == t.examples[i].sentence_labels());
    CHECK(records[i].predicted.size() == t.examples[i].sentence_words.size());
    CHECK(records[i].origin == t.examples[i].origin);
    CHECK(records[i].spans == reconstruct_spans(records[i].predicted));
  }
  CHECK(predict(t.model, {}, t.vocab).empty());
  PredictOptions threaded;
  threaded.threads = 3;
  threaded.batch_size = 3;
  const auto again = predict(t.model, t.examples, t.vocab, threaded);
  for (size_t i = 0; i < records.size(); ++i) CHECK(again[i].predicted == records[i].predicted);
}

TEST_CASE("overfit model recovers gold labels") {
  Tiny t;
  TrainOptions options;
  options.model = t.model.config;
  options.model.dropout_rate = 0.0;
  options.optimizer.learning_rate = 3e-3;
  options.optimizer.batch_size = 16;
  options.epochs = 60;
  const auto result = train_zero_shot(t.examples, {}, t.vocab, options);
  const auto records = predict(result.epoch_models.back(), t.examples, t.vocab);
  for (const auto& r : records) CHECK(r.predicted == r.gold);
}

TEST_CASE("prediction export") {
  std::ostringstream out;
  const std::vector<PredictionRecord> records = {record("A", {1, 0}, {1, 1})};
  write_predictions(records, out);
  const auto json = nlohmann::json::parse(out.str());
  CHECK(json.at("query_class") == "A");
  CHECK(json.at("predicted") == std::vector<int>{1, 1});
}

TEST_CASE("protocol with only k=0 skips fine-tuning") {
  Tiny t;
  ProtocolInputs inputs;
  inputs.zero_shot = &t.model;
  inputs.test = t.examples;
  inputs.unseen = "Disease";
  inputs.ks = {0};
  const auto rows = evaluate_protocol(inputs, t.vocab, FineTuneOptions{}, {}, 0);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].k == 0);
  CHECK(rows[0].examples == 8);
  inputs.unseen = "Gene";
  CHECK_THROWS_AS(evaluate_protocol(inputs, t.vocab, FineTuneOptions{}, {}, 0), DataError);
}

TEST_CASE("multi-class predictions become per-class records") {
  Tiny t;
  const auto data = to_multiclass_dataset(split_corpus(generate_synthetic(t.spec)));
  auto config = t.model.config;
  config.num_labels = data.classes.size();
  const auto model = init_model(config);
  const auto records = predict_multiclass(model, data, t.vocab);
  CHECK(records.size() == data.examples.size() * 2);
  for (const auto& r : records) {
    for (int32_t v : r.gold) CHECK((v == 0 || v == 1));
  }
}

}  // namespace
}  // namespace zsner
