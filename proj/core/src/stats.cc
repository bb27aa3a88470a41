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

#include "zsner/stats.h"

#include <cstdio>

namespace zsner {

double ClassCount::labeled_token_percentage() const {
  if (total_token_count == 0) return 0.0;
  return 100.0 * static_cast<double>(labeled_token_count) /
         static_cast<double>(total_token_count);
}

ClassStats compute_stats(const SentenceCorpus& corpus,
                         const WordTokenizer& tokenizer) {
  ClassStats stats;
  for (const auto& sentence : corpus.sentences) {
    const auto words = tokenizer.tokenize(sentence.text);
    const auto n = static_cast<int64_t>(words.size());
    ++stats.sentence_count;
    stats.token_count += n;
    for (const auto& cls : sentence.class_inventory) {
      auto& count = stats.classes[cls];
      ++count.sentence_count;
      count.total_token_count += n;
      for (const auto& word : words) {
        for (const auto& span : sentence.annotations) {
          if (span.class_name == cls && span.start < word.end &&
              word.start < span.end) {
            ++count.labeled_token_count;
            break;
          }
        }
      }
    }
  }
  return stats;
}

std::string format_stats_tsv(const ClassStats& stats) {
  std::string out = "Class\tA\tB\tC\n";
  char pct[32];
  for (const auto& [cls, count] : stats.classes) {
    std::snprintf(pct, sizeof(pct), "%.2f", count.labeled_token_percentage());
    out += cls + "\t" + std::to_string(count.sentence_count) + "\t" +
           std::to_string(count.labeled_token_count) + "\t" + pct + "\n";
  }
  return out;
}

}  // namespace zsner
