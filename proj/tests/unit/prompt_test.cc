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

#include <set>
#include <sstream>

#include "test_util.h"
#include "zsner/error.h"
#include "zsner/prompt.h"

namespace zsner {
namespace {

Sentence naloxone() {
  return {"d1", 0, "cdr", "Naloxone reverses hypotension .", 0,
          {{0, 8, "Chemical", "cdr"}, {18, 29, "Disease", "cdr"}},
          {"Chemical", "Disease"}};
}

std::vector<PromptExample> examples_of(const std::string& cls, int n, int first_doc) {
  std::vector<PromptExample> out;
  for (int i = 0; i < n; ++i) {
    PromptExample ex;
    ex.query_class = cls;
    ex.label_words = {cls};
    ex.sentence_words = {{"w", 0, 1}};
    ex.word_labels = {0, i % 2};
    ex.origin = {"doc" + std::to_string(first_doc + i), 0};
    out.push_back(ex);
  }
  return out;
}

TEST_CASE("factorize the Naloxone sentence") {
  const auto chem = factorize(naloxone(), "Chemical", LabelVariant::kLabelAsNegative);
  CHECK(chem.label_words == std::vector<std::string>{"Chemical"});
  CHECK(chem.word_labels == std::vector<int32_t>{0, 1, 0, 0, 0});
  CHECK(chem.sentence_labels() == std::vector<int32_t>{1, 0, 0, 0});

  const auto dis = factorize(naloxone(), "Disease", LabelVariant::kLabelAsNegative);
  CHECK(dis.sentence_labels() == std::vector<int32_t>{0, 0, 1, 0});

  const auto pos = factorize(naloxone(), "Disease", LabelVariant::kLabelAsPositive);
  CHECK(pos.word_labels == std::vector<int32_t>{1, 0, 0, 1, 0});
}

TEST_CASE("query without spans gives all-zero labels") {
  auto s = naloxone();
  s.class_inventory.push_back("Gene");
  const auto ex = factorize(s, "Gene", LabelVariant::kLabelAsNegative);
  CHECK(ex.sentence_labels() == std::vector<int32_t>(4, 0));
  CHECK_FALSE(ex.has_positive());
  CHECK_THROWS_AS(factorize(naloxone(), "Gene", LabelVariant::kLabelAsNegative), DataError);
}

TEST_CASE("multi-word labels are tokenized") {
  Sentence s{"d", 0, "x", "hela cells", 0, {{0, 4, "Cell Line", "x"}}, {"Cell Line"}};
  const auto ex = factorize(s, "Cell Line", LabelVariant::kLabelAsPositive);
  CHECK(ex.label_words == std::vector<std::string>{"Cell", "Line"});
  CHECK(ex.word_labels == std::vector<int32_t>{1, 1, 1, 0});
}

TEST_CASE("two-class sentence expands to two examples") {
  SentenceCorpus corpus;
  corpus.sentences.push_back(naloxone());
  const auto examples = expand_corpus(corpus, LabelVariant::kLabelAsNegative);
  REQUIRE(examples.size() == 2);
  CHECK(examples[0].query_class == "Chemical");
  CHECK(examples[1].query_class == "Disease");
  CHECK(expand_corpus(SentenceCorpus{}, LabelVariant::kLabelAsNegative).empty());
}

TEST_CASE("expand_corpus orders by origin then class") {
  std::mt19937_64 rng(5);
  const auto corpus = testing::random_corpus(rng, 20, 4);
  const auto examples = expand_corpus(corpus, LabelVariant::kLabelAsNegative);
  for (size_t i = 1; i < examples.size(); ++i) {
    const auto a = std::tie(examples[i - 1].origin, examples[i - 1].query_class);
    const auto b = std::tie(examples[i].origin, examples[i].query_class);
    CHECK(a < b);
  }
}

TEST_CASE("prompt records round trip") {
  SentenceCorpus corpus;
  corpus.sentences.push_back(naloxone());
  auto examples = expand_corpus(corpus, LabelVariant::kLabelAsPositive);
  examples[1].split = SplitTag::kTest;
  std::stringstream buf;
  write_prompt_examples(examples, buf);
  CHECK(read_prompt_examples(buf) == examples);
}

TEST_CASE("one class of 100 splits 85/5/10") {
  const auto split = split_dataset(examples_of("Drug", 100, 0), SplitRatios{}, 0);
  CHECK(split.train.size() == 85);
  CHECK(split.validation.size() == 5);
  CHECK(split.test.size() == 10);
}

TEST_CASE("two classes 200/40 split per class") {
  auto examples = examples_of("Disease", 200, 0);
  const auto drugs = examples_of("Drug", 40, 1000);
  examples.insert(examples.end(), drugs.begin(), drugs.end());
  const auto split = split_dataset(examples, SplitRatios{}, 3);
  auto count = [](const std::vector<PromptExample>& part, const std::string& cls) {
    return std::count_if(part.begin(), part.end(),
                         [&](const PromptExample& e) { return e.query_class == cls; });
  };
  CHECK(count(split.train, "Disease") == 170);
  CHECK(count(split.validation, "Disease") == 10);
  CHECK(count(split.test, "Disease") == 20);
  CHECK(count(split.train, "Drug") == 34);
  CHECK(count(split.validation, "Drug") == 2);
  CHECK(count(split.test, "Drug") == 4);
}

TEST_CASE("split is deterministic and tags examples") {
  const auto examples = examples_of("Drug", 60, 0);
  const auto a = split_dataset(examples, SplitRatios{}, 9);
  const auto b = split_dataset(examples, SplitRatios{}, 9);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  for (const auto& e : a.test) CHECK(e.split == SplitTag::kTest);
  for (const auto& e : a.validation) CHECK(e.split == SplitTag::kValidation);
}

TEST_CASE("tiny classes go to train with a warning") {
  auto examples = examples_of("Drug", 30, 0);
  const auto rare = examples_of("Rare", 2, 500);
  examples.insert(examples.end(), rare.begin(), rare.end());
  const auto split = split_dataset(examples, SplitRatios{}, 0);
  CHECK(split.warnings.size() == 1);
  const auto in_train = std::count_if(split.train.begin(), split.train.end(),
                                      [](const PromptExample& e) { return e.query_class == "Rare"; });
  CHECK(in_train == 2);
}

TEST_CASE("bad split inputs") {
  CHECK_THROWS_AS(split_dataset({}, SplitRatios{}, 0), DataError);
  CHECK_THROWS_AS(split_dataset(examples_of("Drug", 10, 0), SplitRatios{0.5, 0.5, 0.5}, 0),
                  UsageError);
}

TEST_CASE("exclude_class moves every unseen query to the pool") {
  auto train = examples_of("Disease", 10, 0);
  const auto drugs = examples_of("Drug", 6, 0);
  train.insert(train.end(), drugs.begin(), drugs.end());
  const auto result = exclude_class(train, "Drug");
  CHECK(result.reduced.size() == 10);
  for (const auto& e : result.reduced) CHECK(e.query_class == "Disease");
  CHECK(result.held_out == drugs);
  CHECK_THROWS_AS(exclude_class(train, "Gene"), DataError);
}

TEST_CASE("few-shot sampling") {
  const auto pool = examples_of("Drug", 20, 0);  // odd indices are positive
  const auto one = sample_few_shot(pool, 1, 0);
  REQUIRE(one.size() == 1);
  CHECK(one == sample_few_shot(pool, 1, 0));
  CHECK(one[0].has_positive());

  const auto ten = sample_few_shot(pool, 10, 4);
  std::set<Origin> origins;
  for (const auto& e : ten) {
    origins.insert(e.origin);
    CHECK(e.has_positive());
  }
  CHECK(origins.size() == 10);
  CHECK_THROWS_AS(sample_few_shot(pool, 11, 0), DataError);
  CHECK_THROWS_AS(sample_few_shot(examples_of("Drug", 100, 0), 100, 0), DataError);
}

TEST_CASE("multi-class dataset for the Naloxone sentence") {
  SentenceCorpus corpus;
  corpus.sentences.push_back(naloxone());
  corpus.sentences.push_back({"d2", 0, "cdr", "nothing here", 0, {}, {"Chemical", "Disease"}});
  const auto data = to_multiclass_dataset(corpus);
  CHECK(data.classes.names == std::vector<std::string>{"Chemical", "Disease"});
  REQUIRE(data.examples.size() == 2);
  CHECK(data.examples[0].word_labels == std::vector<int32_t>{1, 0, 2, 0});
  CHECK(data.examples[1].word_labels == std::vector<int32_t>{0, 0});
  CHECK(ClassVocabulary::deserialize(data.classes.serialize()) == data.classes);
}

TEST_CASE("multi-class overlap keeps the longest span") {
  SentenceCorpus corpus;
  corpus.sentences.push_back(
      {"d", 0, "x", "breast cancer risk", 0,
       {{7, 13, "Disease", "x"}, {0, 13, "Specific Disease", "x"}},
       {"Disease", "Specific Disease"}});
  const auto data = to_multiclass_dataset(corpus);
  CHECK(data.examples[0].word_labels == std::vector<int32_t>{2, 2, 0});
}

}  // namespace
}  // namespace zsner
