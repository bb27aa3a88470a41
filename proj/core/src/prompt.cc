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

#include "zsner/prompt.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "zsner/error.h"

namespace zsner {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool intersects(const Word& word, const EntitySpan& span) {
  return word.start < span.end && span.start < word.end;
}

}  // namespace

std::string_view to_string(LabelVariant variant) {
  return variant == LabelVariant::kLabelAsPositive ? "label_positive"
                                                   : "label_negative";
}

LabelVariant parse_label_variant(std::string_view text) {
  if (text == "label_positive" || text == "1") {
    return LabelVariant::kLabelAsPositive;
  }
  if (text == "label_negative" || text == "0") {
    return LabelVariant::kLabelAsNegative;
  }
  throw UsageError("unknown label variant \"" + std::string(text) +
                   "\" (expected label_positive or label_negative)");
}

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain:
      return "train";
    case SplitTag::kValidation:
      return "val";
    case SplitTag::kTest:
      return "test";
    case SplitTag::kUnassigned:
      break;
  }
  return "none";
}

SplitTag parse_split_tag(std::string_view text) {
  if (text == "train") return SplitTag::kTrain;
  if (text == "val") return SplitTag::kValidation;
  if (text == "test") return SplitTag::kTest;
  if (text == "none") return SplitTag::kUnassigned;
  throw DataError("unknown split tag \"" + std::string(text) + "\"");
}

std::vector<int32_t> PromptExample::sentence_labels() const {
  return {word_labels.begin() + static_cast<std::ptrdiff_t>(label_words.size()),
          word_labels.end()};
}

bool PromptExample::has_positive() const {
  return std::any_of(
      word_labels.begin() + static_cast<std::ptrdiff_t>(label_words.size()),
      word_labels.end(), [](int32_t v) { return v != 0; });
}

PromptExample factorize(const Sentence& sentence, const std::string& query_class,
                        LabelVariant variant, const WordTokenizer& tokenizer) {
  if (!std::binary_search(sentence.class_inventory.begin(),
                          sentence.class_inventory.end(), query_class)) {
    throw DataError("class \"" + query_class + "\" is not in the inventory of " +
                    sentence.doc_id + "#" + std::to_string(sentence.sent_index));
  }
  PromptExample ex;
  ex.query_class = query_class;
  for (auto& word : tokenizer.tokenize(query_class)) {
    ex.label_words.push_back(std::move(word.text));
  }
  ex.sentence_words = tokenizer.tokenize(sentence.text);
  ex.variant = variant;
  ex.origin = {sentence.doc_id, sentence.sent_index};
  const int32_t label_value = variant == LabelVariant::kLabelAsPositive ? 1 : 0;
  ex.word_labels.assign(ex.label_words.size(), label_value);
  for (const auto& word : ex.sentence_words) {
    const bool positive = std::any_of(
        sentence.annotations.begin(), sentence.annotations.end(),
        [&](const EntitySpan& span) {
          return span.class_name == query_class && intersects(word, span);
        });
    ex.word_labels.push_back(positive ? 1 : 0);
  }
  return ex;
}

std::vector<PromptExample> expand_corpus(const SentenceCorpus& corpus,
                                         LabelVariant variant,
                                         const WordTokenizer& tokenizer) {
  std::vector<const Sentence*> order;
  order.reserve(corpus.sentences.size());
  for (const auto& s : corpus.sentences) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const Sentence* a, const Sentence* b) {
                     return std::tie(a->doc_id, a->sent_index) <
                            std::tie(b->doc_id, b->sent_index);
                   });
  std::vector<PromptExample> out;
  for (const Sentence* s : order) {
    // Inventories are kept sorted, so class order is already canonical.
    for (const auto& cls : s->class_inventory) {
      out.push_back(factorize(*s, cls, variant, tokenizer));
    }
  }
  return out;
}

void write_prompt_examples(const std::vector<PromptExample>& examples,
                           std::ostream& out) {
  for (const auto& ex : examples) {
    ordered_json obj;
    obj["query_class"] = ex.query_class;
    obj["variant"] = std::string(to_string(ex.variant));
    obj["label_words"] = ex.label_words;
    auto words = ordered_json::array();
    auto offsets = ordered_json::array();
    for (const auto& w : ex.sentence_words) {
      words.push_back(w.text);
      offsets.push_back({w.start, w.end});
    }
    obj["words"] = std::move(words);
    obj["offsets"] = std::move(offsets);
    obj["labels"] = ex.word_labels;
    obj["origin"] = {{"doc_id", ex.origin.doc_id},
                     {"sent_index", ex.origin.sent_index}};
    obj["split"] = std::string(to_string(ex.split));
    out << obj.dump() << '\n';
  }
}

std::vector<PromptExample> read_prompt_examples(std::istream& in,
                                                std::string_view source_name) {
  std::vector<PromptExample> out;
  std::string line;
  int64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const std::string where =
        std::string(source_name) + ":" + std::to_string(line_number);
    try {
      const auto obj = json::parse(line);
      PromptExample ex;
      ex.query_class = obj.at("query_class").get<std::string>();
      ex.variant = parse_label_variant(obj.at("variant").get<std::string>());
      ex.label_words = obj.at("label_words").get<std::vector<std::string>>();
      const auto words = obj.at("words").get<std::vector<std::string>>();
      const auto offsets =
          obj.at("offsets").get<std::vector<std::array<int32_t, 2>>>();
      if (words.size() != offsets.size()) {
        throw DataError("words and offsets differ in length");
      }
      for (size_t i = 0; i < words.size(); ++i) {
        ex.sentence_words.push_back({words[i], offsets[i][0], offsets[i][1]});
      }
      ex.word_labels = obj.at("labels").get<std::vector<int32_t>>();
      if (ex.word_labels.size() != ex.label_words.size() + words.size()) {
        throw DataError("labels length does not match label_words + words");
      }
      ex.origin.doc_id = obj.at("origin").at("doc_id").get<std::string>();
      ex.origin.sent_index = obj.at("origin").at("sent_index").get<int32_t>();
      ex.split = parse_split_tag(obj.value("split", std::string("none")));
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw DataError(where + ": malformed prompt record: " + e.what());
    } catch (const Error& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return out;
}

void write_prompt_file(const std::vector<PromptExample>& examples,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_prompt_examples(examples, out);
  if (!out) throw IoError("failed writing " + path);
}

std::vector<PromptExample> read_prompt_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_prompt_examples(in, path);
}

void SplitRatios::validate() const {
  if (!(train > 0) || !(validation > 0) || !(test > 0)) {
    throw UsageError("split ratios must all be positive");
  }
  if (std::abs(train + validation + test - 1.0) > 1e-9) {
    throw UsageError("split ratios must sum to 1");
  }
}

ExclusionResult exclude_class(const std::vector<PromptExample>& train,
                              const std::string& unseen) {
  ExclusionResult result;
  for (const auto& ex : train) {
    (ex.query_class == unseen ? result.held_out : result.reduced).push_back(ex);
  }
  if (result.held_out.empty()) {
    throw DataError("unseen class \"" + unseen +
                    "\" does not occur in the training examples");
  }
  return result;
}

std::vector<PromptExample> sample_few_shot(const std::vector<PromptExample>& pool,
                                           int32_t k, uint64_t seed) {
  if (k < 0) throw UsageError("few-shot k must be non-negative");
  std::vector<size_t> eligible;
  for (size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].has_positive()) eligible.push_back(i);
  }
  if (static_cast<size_t>(k) > eligible.size()) {
    throw DataError("requested " + std::to_string(k) +
                    " shots but the pool has only " +
                    std::to_string(eligible.size()) +
                    " examples with a positive word");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  std::vector<PromptExample> shots;
  shots.reserve(k);
  for (int32_t i = 0; i < k; ++i) shots.push_back(pool[eligible[i]]);
  return shots;
}

int32_t ClassVocabulary::id(const std::string& name) const {
  const auto it = std::lower_bound(names.begin(), names.end(), name);
  if (it == names.end() || *it != name) {
    throw DataError("class \"" + name + "\" is not in the class vocabulary");
  }
  return static_cast<int32_t>(it - names.begin()) + 1;
}

const std::string& ClassVocabulary::name(int32_t id) const {
  static const std::string kOutside = "O";
  if (id == 0) return kOutside;
  if (id < 0 || id > static_cast<int32_t>(names.size())) {
    throw DataError("class id " + std::to_string(id) + " out of range");
  }
  return names[id - 1];
}

std::string ClassVocabulary::serialize() const {
  std::string out;
  for (const auto& n : names) out += n + "\n";
  return out;
}

ClassVocabulary ClassVocabulary::deserialize(std::string_view text) {
  ClassVocabulary vocab;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) vocab.names.push_back(line);
  }
  if (!std::is_sorted(vocab.names.begin(), vocab.names.end())) {
    throw DataError("class vocabulary must be sorted");
  }
  return vocab;
}

MultiClassDataset to_multiclass_dataset(const SentenceCorpus& corpus,
                                        const WordTokenizer& tokenizer) {
  MultiClassDataset dataset;
  std::set<std::string> names;
  for (const auto& s : corpus.sentences) {
    names.insert(s.class_inventory.begin(), s.class_inventory.end());
  }
  dataset.classes.names.assign(names.begin(), names.end());

  for (const auto& s : corpus.sentences) {
    std::vector<const EntitySpan*> order;
    for (const auto& span : s.annotations) order.push_back(&span);
    std::stable_sort(order.begin(), order.end(),
                     [](const EntitySpan* a, const EntitySpan* b) {
                       if (a->length() != b->length()) {
                         return a->length() > b->length();
                       }
                       return a->start < b->start;
                     });
    std::vector<const EntitySpan*> kept;
    for (const EntitySpan* span : order) {
      const bool clash = std::any_of(
          kept.begin(), kept.end(),
          [&](const EntitySpan* k) { return k->overlaps(*span); });
      if (!clash) kept.push_back(span);
    }
    MultiClassExample ex;
    ex.sentence_words = tokenizer.tokenize(s.text);
    ex.origin = {s.doc_id, s.sent_index};
    for (const auto& word : ex.sentence_words) {
      int32_t label = 0;
      for (const EntitySpan* span : kept) {
        if (intersects(word, *span)) {
          label = dataset.classes.id(span->class_name);
          break;
        }
      }
      ex.word_labels.push_back(label);
    }
    dataset.examples.push_back(std::move(ex));
  }
  return dataset;
}

}  // namespace zsner
