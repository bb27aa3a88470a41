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

#ifndef ZSNER_STATS_H_
#define ZSNER_STATS_H_

#include <cstdint>
#include <map>
#include <string>

#include "zsner/corpus.h"
#include "zsner/text.h"

namespace zsner {

struct ClassCount {
  // Sentences whose class inventory contains the class.
  int64_t sentence_count = 0;
  // Word tokens intersecting a span of the class.
  int64_t labeled_token_count = 0;
  // All word tokens in those sentences.
  int64_t total_token_count = 0;

  // labeled / total * 100, or 0 for an empty denominator.
  double labeled_token_percentage() const;

  bool operator==(const ClassCount&) const = default;
};

struct ClassStats {
  std::map<std::string, ClassCount> classes;
  int64_t sentence_count = 0;
  int64_t token_count = 0;

  bool operator==(const ClassStats&) const = default;
};

ClassStats compute_stats(const SentenceCorpus& corpus,
                         const WordTokenizer& tokenizer = WordTokenizer());

// Tab-separated table with the header `Class A B C`: A sentences queried
// for the class, B labeled tokens, C labeled-token percentage (2 decimals).
std::string format_stats_tsv(const ClassStats& stats);

}  // namespace zsner

#endif  // ZSNER_STATS_H_
