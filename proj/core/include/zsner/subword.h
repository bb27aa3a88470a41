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

#ifndef ZSNER_SUBWORD_H_
#define ZSNER_SUBWORD_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zsner/prompt.h"

namespace zsner {

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kContinuationPrefix = "##";

// Token strings with dense ids; the line number of a vocabulary file is the
// token id. Lookups lowercase the input when the vocabulary is uncased.
class Vocab {
 public:
  Vocab() = default;
  static Vocab from_tokens(std::vector<std::string> tokens,
                           bool lowercase = true);

  int32_t size() const { return static_cast<int32_t>(tokens_.size()); }
  // -1 when absent.
  int32_t find(std::string_view token) const;
  const std::string& token(int32_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool lowercase() const { return lowercase_; }

  int32_t pad_id() const { return pad_; }
  int32_t unk_id() const { return unk_; }
  int32_t cls_id() const { return cls_; }
  int32_t sep_id() const { return sep_; }
  int32_t mask_id() const { return mask_; }

  std::string serialize() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int32_t> ids_;
  bool lowercase_ = true;
  int32_t pad_ = -1, unk_ = -1, cls_ = -1, sep_ = -1, mask_ = -1;
};

// One token per line, UTF-8. Throws DataError on duplicates (naming both
// line numbers) or when a reserved token is missing.
Vocab load_vocab(std::istream& in, std::string_view source_name = "<vocab>",
                 bool lowercase = true);
Vocab load_vocab_file(const std::string& path, bool lowercase = true);

// Greedy longest-prefix match; continuation pieces carry the "##" prefix.
// A word with an unmatchable position becomes a single [UNK].
std::vector<int32_t> subword_tokenize(std::string_view word, const Vocab& vocab);

// Builds an uncased vocabulary: reserved tokens, every character as a word
// start and as a continuation piece, the given words, then word prefixes and
// suffixes until `target_size` is reached.
Vocab build_vocab(const std::vector<std::string>& words, int32_t target_size);

enum class LabelPropagation {
  kAllSubtokens,   // every piece of a word carries its label and loss
  kFirstSubtoken,  // only the first piece is supervised
};

struct EncodeOptions {
  int32_t max_len = 128;
  LabelPropagation propagation = LabelPropagation::kAllSubtokens;
  bool label_segment_in_loss = true;
};

// Layout: [CLS] label-pieces [SEP] sentence-pieces [SEP] [PAD]...
struct EncodedExample {
  std::vector<int32_t> input_ids;
  std::vector<int32_t> segment_ids;
  std::vector<int32_t> attention_mask;
  std::vector<int32_t> labels;
  std::vector<int32_t> loss_mask;
  std::vector<int32_t> eval_mask;
  // Sentence word -> position of its first piece; -1 for truncated words.
  std::vector<int32_t> word_map;
  int32_t truncated_words = 0;
  int32_t truncated_positive_words = 0;

  int32_t length() const { return static_cast<int32_t>(input_ids.size()); }
  int32_t attended_length() const;
};

// Sentence-tail words that do not fit are dropped whole; the label segment
// is never truncated. Throws DataError when the label alone does not fit.
EncodedExample encode(const PromptExample& example, const Vocab& vocab,
                      const EncodeOptions& options = {});

// Single-segment encoding [CLS] sentence [SEP] for the multi-class baseline.
EncodedExample encode_multiclass(const MultiClassExample& example,
                                 const Vocab& vocab,
                                 const EncodeOptions& options = {});

// Word label = prediction at the word's first piece; truncated words get 0.
std::vector<int32_t> align_predictions(std::span<const int32_t> predictions,
                                       const EncodedExample& encoded);

}  // namespace zsner

#endif  // ZSNER_SUBWORD_H_
