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

#ifndef ZSNER_PROMPT_H_
#define ZSNER_PROMPT_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zsner/corpus.h"
#include "zsner/text.h"

namespace zsner {

// Supervision target for the first-segment label words.
enum class LabelVariant {
  kLabelAsNegative,  // label words labeled 0
  kLabelAsPositive,  // label words labeled 1
};

std::string_view to_string(LabelVariant variant);
LabelVariant parse_label_variant(std::string_view text);

enum class SplitTag { kUnassigned, kTrain, kValidation, kTest };

std::string_view to_string(SplitTag tag);
SplitTag parse_split_tag(std::string_view text);

struct Origin {
  std::string doc_id;
  int32_t sent_index = 0;

  auto operator<=>(const Origin&) const = default;
};

// One binary, label-conditioned example: <label words> [SEP] <sentence>.
struct PromptExample {
  std::string query_class;
  std::vector<std::string> label_words;
  std::vector<Word> sentence_words;
  // Over label_words followed by sentence_words.
  std::vector<int32_t> word_labels;
  LabelVariant variant = LabelVariant::kLabelAsNegative;
  Origin origin;
  SplitTag split = SplitTag::kUnassigned;

  // Labels of the sentence words only.
  std::vector<int32_t> sentence_labels() const;
  bool has_positive() const;

  bool operator==(const PromptExample&) const = default;
};

// Word labels for `query_class`: 1 iff the word intersects a span of that
// class. Throws DataError if the class is not in the sentence inventory.
PromptExample factorize(const Sentence& sentence, const std::string& query_class,
                        LabelVariant variant,
                        const WordTokenizer& tokenizer = WordTokenizer());

// One example per (sentence, inventory class), ordered by
// (doc_id, sent_index, class name).
std::vector<PromptExample> expand_corpus(
    const SentenceCorpus& corpus, LabelVariant variant,
    const WordTokenizer& tokenizer = WordTokenizer());

// Line-oriented JSON records. Field names: query_class, variant,
// label_words, words, offsets, labels, origin {doc_id, sent_index}, split.
void write_prompt_examples(const std::vector<PromptExample>& examples,
                           std::ostream& out);
std::vector<PromptExample> read_prompt_examples(
    std::istream& in, std::string_view source_name = "<prompts>");
void write_prompt_file(const std::vector<PromptExample>& examples,
                       const std::string& path);
std::vector<PromptExample> read_prompt_file(const std::string& path);

struct SplitRatios {
  double train = 0.85;
  double validation = 0.05;
  double test = 0.10;

  void validate() const;
};

struct DatasetSplit {
  std::vector<PromptExample> train;
  std::vector<PromptExample> validation;
  std::vector<PromptExample> test;
  std::vector<std::string> warnings;
};

// Stratified sentence-level split: every example of a sentence lands in the
// same part, and each class's per-part count stays within one of
// class_count * ratio. Classes with fewer examples than parts go to train
// (with a warning).
DatasetSplit split_dataset(const std::vector<PromptExample>& examples,
                           const SplitRatios& ratios, uint64_t seed);

struct ExclusionResult {
  std::vector<PromptExample> reduced;
  std::vector<PromptExample> held_out;
};

// Removes every `unseen` query from train; the removed examples become the
// few-shot pool.
ExclusionResult exclude_class(const std::vector<PromptExample>& train,
                              const std::string& unseen);

// Uniform sample without replacement among pool examples with at least one
// positive sentence word.
std::vector<PromptExample> sample_few_shot(const std::vector<PromptExample>& pool,
                                           int32_t k, uint64_t seed);

// Class id 0 is "outside"; class i+1 is names[i].
struct ClassVocabulary {
  std::vector<std::string> names;

  int32_t size() const { return static_cast<int32_t>(names.size()) + 1; }
  int32_t id(const std::string& name) const;
  const std::string& name(int32_t id) const;

  std::string serialize() const;
  static ClassVocabulary deserialize(std::string_view text);

  bool operator==(const ClassVocabulary&) const = default;
};

struct MultiClassExample {
  std::vector<Word> sentence_words;
  std::vector<int32_t> word_labels;
  Origin origin;

  bool operator==(const MultiClassExample&) const = default;
};

struct MultiClassDataset {
  ClassVocabulary classes;
  std::vector<MultiClassExample> examples;
};

// IO labels over a frozen class vocabulary. Overlapping spans are resolved
// longest first, ties by earlier start.
MultiClassDataset to_multiclass_dataset(
    const SentenceCorpus& corpus,
    const WordTokenizer& tokenizer = WordTokenizer());

}  // namespace zsner

#endif  // ZSNER_PROMPT_H_
