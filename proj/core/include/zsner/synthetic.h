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

#ifndef ZSNER_SYNTHETIC_H_
#define ZSNER_SYNTHETIC_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "zsner/corpus.h"

namespace zsner {

// One slot of a class surface pattern: either a word drawn from a literal
// pool (entries may span several words) or an integer in a closed range.
struct PatternElement {
  enum class Kind { kPool, kNumber };

  Kind kind = Kind::kPool;
  std::vector<std::string> pool;
  int32_t min_value = 0;
  int32_t max_value = 0;

  static PatternElement literal(std::vector<std::string> pool) {
    return {Kind::kPool, std::move(pool), 0, 0};
  }
  static PatternElement number(int32_t lo, int32_t hi) {
    return {Kind::kNumber, {}, lo, hi};
  }
  bool operator==(const PatternElement&) const = default;
};

struct ClassPattern {
  std::string name;
  std::vector<PatternElement> elements;
};

// Templates are literal text with `<Class Name>` entity slots and
// `{filler}` slots. Every slot is filled independently.
struct SyntheticDataset {
  std::string name;
  std::vector<std::string> classes;
  std::vector<std::string> templates;
};

struct SyntheticSpec {
  std::vector<ClassPattern> classes;
  std::vector<SyntheticDataset> datasets;
  std::map<std::string, std::vector<std::string>> fillers;
  int32_t sentence_count = 0;
  int32_t max_sentences_per_document = 3;
  uint64_t seed = 0;
};

// Deterministic for a fixed spec and seed. Throws DataError for templates
// that cannot be satisfied (unknown class or filler, empty pool, bad range).
Corpus generate_synthetic(const SyntheticSpec& spec);

// Desk-scale stand-in for a merged biomedical corpus: five datasets with two
// classes each, including the synonym pairs Disease/Specific Disease and
// Chemical/Specific Chemical (identical surface patterns, shared label word).
SyntheticSpec default_synthetic_spec(int32_t sentence_count = 4000,
                                     uint64_t seed = 0);

// One dataset with three disjoint classes; used by the multi-class pilot.
SyntheticSpec pilot_synthetic_spec(int32_t sentence_count = 96,
                                   uint64_t seed = 0);

// Class pairs with identical patterns whose names share at least one word.
std::vector<std::pair<std::string, std::string>> synonym_pairs(
    const SyntheticSpec& spec);

// Every lowercased word a SyntheticSpec can emit, plus the words of class names.
std::vector<std::string> synthetic_words(const SyntheticSpec& spec);

}  // namespace zsner

#endif  // ZSNER_SYNTHETIC_H_
