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

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>

#include "zsner/error.h"
#include "zsner/prompt.h"

namespace zsner {
namespace {

constexpr int kParts = 3;

// Sentences sharing the same multiset of query classes are interchangeable
// for stratification, so allocation happens per stratum.
struct Stratum {
  std::vector<std::string> signature;
  std::vector<std::vector<size_t>> groups;  // example indices per sentence
  std::array<int64_t, kParts> alloc{};
  bool pinned_to_train = false;
};

std::array<int64_t, kParts> largest_remainder(int64_t n,
                                              const std::array<double, kParts>& r) {
  std::array<int64_t, kParts> out{};
  std::array<double, kParts> frac{};
  int64_t assigned = 0;
  for (int s = 0; s < kParts; ++s) {
    const double exact = static_cast<double>(n) * r[s];
    out[s] = static_cast<int64_t>(std::floor(exact + 1e-9));
    frac[s] = exact - static_cast<double>(out[s]);
    assigned += out[s];
  }
  while (assigned < n) {
    int best = 0;
    for (int s = 1; s < kParts; ++s) {
      if (frac[s] > frac[best] + 1e-12) best = s;
    }
    ++out[best];
    frac[best] = -1.0;
    ++assigned;
  }
  return out;
}

}  // namespace

DatasetSplit split_dataset(const std::vector<PromptExample>& examples,
                           const SplitRatios& ratios, uint64_t seed) {
  ratios.validate();
  if (examples.empty()) throw DataError("cannot split an empty example list");
  const std::array<double, kParts> r = {ratios.train, ratios.validation,
                                        ratios.test};

  std::map<Origin, std::vector<size_t>> by_origin;
  for (size_t i = 0; i < examples.size(); ++i) {
    by_origin[examples[i].origin].push_back(i);
  }
  std::map<std::vector<std::string>, Stratum> strata_by_signature;
  for (auto& [origin, indices] : by_origin) {
    std::vector<std::string> signature;
    for (size_t i : indices) signature.push_back(examples[i].query_class);
    std::sort(signature.begin(), signature.end());
    auto& stratum = strata_by_signature[signature];
    stratum.signature = signature;
    stratum.groups.push_back(indices);
  }
  std::vector<Stratum> strata;
  for (auto& [sig, stratum] : strata_by_signature) {
    strata.push_back(std::move(stratum));
  }

  // class -> (stratum index, examples of the class per sentence)
  std::map<std::string, std::vector<std::pair<size_t, int64_t>>> membership;
  std::map<std::string, int64_t> totals;
  for (size_t j = 0; j < strata.size(); ++j) {
    std::map<std::string, int64_t> per_sentence;
    for (const auto& cls : strata[j].signature) ++per_sentence[cls];
    for (const auto& [cls, m] : per_sentence) {
      membership[cls].emplace_back(j, m);
      totals[cls] += m * static_cast<int64_t>(strata[j].groups.size());
    }
  }

  DatasetSplit result;
  for (const auto& [cls, total] : totals) {
    if (total < kParts) {
      result.warnings.push_back("class \"" + cls + "\" has only " +
                                std::to_string(total) +
                                " examples; assigning them all to train");
      for (const auto& [j, m] : membership[cls]) strata[j].pinned_to_train = true;
    }
  }
  for (auto& stratum : strata) {
    const auto n = static_cast<int64_t>(stratum.groups.size());
    stratum.alloc = stratum.pinned_to_train ? std::array<int64_t, kParts>{n, 0, 0}
                                            : largest_remainder(n, r);
  }

  // Per-class error of the current allocation against class_count * ratio.
  auto class_error = [&](const std::string& cls, int s) {
    int64_t count = 0;
    for (const auto& [j, m] : membership[cls]) count += m * strata[j].alloc[s];
    return static_cast<double>(count) - static_cast<double>(totals[cls]) * r[s];
  };
  auto objective = [&] {
    double violation = 0.0;
    double squared = 0.0;
    for (const auto& [cls, total] : totals) {
      for (int s = 0; s < kParts; ++s) {
        const double e = class_error(cls, s);
        squared += e * e;
        violation += std::max(0.0, std::abs(e) - 1.0);
      }
    }
    return std::pair{violation, squared};
  };

  // Per-stratum rounding errors add up for classes spanning several strata;
  // repair with single-sentence moves until no move improves the objective.
  auto current = objective();
  for (int iteration = 0; iteration < 100000; ++iteration) {
    auto best = current;
    size_t best_j = 0;
    int best_from = -1;
    int best_to = -1;
    for (size_t j = 0; j < strata.size(); ++j) {
      if (strata[j].pinned_to_train) continue;
      for (int from = 0; from < kParts; ++from) {
        if (strata[j].alloc[from] == 0) continue;
        for (int to = 0; to < kParts; ++to) {
          if (to == from) continue;
          --strata[j].alloc[from];
          ++strata[j].alloc[to];
          const auto candidate = objective();
          ++strata[j].alloc[from];
          --strata[j].alloc[to];
          if (candidate.first < best.first - 1e-12 ||
              (std::abs(candidate.first - best.first) <= 1e-12 &&
               candidate.second < best.second - 1e-9)) {
            best = candidate;
            best_j = j;
            best_from = from;
            best_to = to;
          }
        }
      }
    }
    if (best_from < 0) break;
    --strata[best_j].alloc[best_from];
    ++strata[best_j].alloc[best_to];
    current = best;
  }
  if (current.first > 1e-9) {
    result.warnings.push_back(
        "stratification could not keep every class within one example of its "
        "target proportion");
  }

  std::vector<SplitTag> tags(examples.size(), SplitTag::kUnassigned);
  std::mt19937_64 rng(seed);
  constexpr std::array<SplitTag, kParts> kTags = {
      SplitTag::kTrain, SplitTag::kValidation, SplitTag::kTest};
  for (auto& stratum : strata) {
    std::shuffle(stratum.groups.begin(), stratum.groups.end(), rng);
    size_t g = 0;
    for (int s = 0; s < kParts; ++s) {
      for (int64_t c = 0; c < stratum.alloc[s]; ++c, ++g) {
        for (size_t i : stratum.groups[g]) tags[i] = kTags[s];
      }
    }
  }
  for (size_t i = 0; i < examples.size(); ++i) {
    PromptExample ex = examples[i];
    ex.split = tags[i];
    switch (tags[i]) {
      case SplitTag::kTrain:
        result.train.push_back(std::move(ex));
        break;
      case SplitTag::kValidation:
        result.validation.push_back(std::move(ex));
        break;
      default:
        result.test.push_back(std::move(ex));
        break;
    }
  }
  return result;
}

}  // namespace zsner
