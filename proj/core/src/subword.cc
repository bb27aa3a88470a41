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

#include "zsner/subword.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>

#include "zsner/error.h"
#include "zsner/text.h"

namespace zsner {
namespace {

constexpr size_t kMaxCharsPerWord = 100;

std::string lower(std::string_view text) {
  std::u32string out;
  for (char32_t c : decode_utf8(text)) out.push_back(to_lower(c));
  return encode_utf8(out);
}

}  // namespace

Vocab Vocab::from_tokens(std::vector<std::string> tokens, bool lowercase) {
  Vocab vocab;
  vocab.lowercase_ = lowercase;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const auto [it, inserted] =
        vocab.ids_.emplace(tokens[i], static_cast<int32_t>(i));
    if (!inserted) {
      throw DataError("duplicate vocabulary token \"" + tokens[i] +
                      "\" on lines " + std::to_string(it->second + 1) + " and " +
                      std::to_string(i + 1));
    }
  }
  vocab.tokens_ = std::move(tokens);
  auto reserved = [&](std::string_view name) {
    const int32_t id = vocab.find(name);
    if (id < 0) {
      throw DataError("vocabulary is missing reserved token " + std::string(name));
    }
    return id;
  };
  vocab.pad_ = reserved(kPadToken);
  vocab.unk_ = reserved(kUnkToken);
  vocab.cls_ = reserved(kClsToken);
  vocab.sep_ = reserved(kSepToken);
  vocab.mask_ = reserved(kMaskToken);
  return vocab;
}

int32_t Vocab::find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? -1 : it->second;
}

std::string Vocab::serialize() const {
  std::string out;
  for (const auto& t : tokens_) out += t + "\n";
  return out;
}

Vocab load_vocab(std::istream& in, std::string_view source_name,
                 bool lowercase) {
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  if (in.bad()) throw IoError("failed reading " + std::string(source_name));
  try {
    return Vocab::from_tokens(std::move(tokens), lowercase);
  } catch (const DataError& e) {
    throw DataError(std::string(source_name) + ": " + e.what());
  }
}

Vocab load_vocab_file(const std::string& path, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path);
  return load_vocab(in, path, lowercase);
}

std::vector<int32_t> subword_tokenize(std::string_view word, const Vocab& vocab) {
  const std::u32string chars =
      decode_utf8(vocab.lowercase() ? lower(word) : std::string(word));
  if (chars.empty() || chars.size() > kMaxCharsPerWord) return {vocab.unk_id()};
  std::vector<int32_t> pieces;
  size_t start = 0;
  while (start < chars.size()) {
    int32_t match = -1;
    size_t end = chars.size();
    for (; end > start; --end) {
      std::string candidate = encode_utf8(
          std::u32string_view(chars).substr(start, end - start));
      if (start > 0) candidate.insert(0, kContinuationPrefix);
      match = vocab.find(candidate);
      if (match >= 0) break;
    }
    if (match < 0) return {vocab.unk_id()};
    pieces.push_back(match);
    start = end;
  }
  return pieces;
}

Vocab build_vocab(const std::vector<std::string>& words, int32_t target_size) {
  std::vector<std::string> tokens = {std::string(kPadToken), std::string(kUnkToken),
                                     std::string(kClsToken), std::string(kSepToken),
                                     std::string(kMaskToken)};
  std::set<std::string> seen(tokens.begin(), tokens.end());
  auto add = [&](const std::string& t) {
    if (seen.insert(t).second) tokens.push_back(t);
  };
  std::set<char32_t> chars;
  std::vector<std::u32string> lowered;
  for (const auto& w : words) {
    lowered.push_back(decode_utf8(lower(w)));
    chars.insert(lowered.back().begin(), lowered.back().end());
  }
  for (char32_t c = U'a'; c <= U'z'; ++c) chars.insert(c);
  for (char32_t c = U'0'; c <= U'9'; ++c) chars.insert(c);
  for (char32_t c : chars) add(encode_utf8(c));
  for (char32_t c : chars) add(std::string(kContinuationPrefix) + encode_utf8(c));
  for (const auto& w : lowered) add(encode_utf8(w));
  for (size_t len = 2; len <= 6; ++len) {
    for (const auto& w : lowered) {
      if (static_cast<int32_t>(tokens.size()) >= target_size) break;
      if (w.size() <= len) continue;
      add(encode_utf8(w.substr(0, len)));
      if (static_cast<int32_t>(tokens.size()) >= target_size) break;
      add(std::string(kContinuationPrefix) + encode_utf8(w.substr(w.size() - len)));
    }
  }
  for (int32_t i = 0; static_cast<int32_t>(tokens.size()) < target_size; ++i) {
    add("[unused" + std::to_string(i) + "]");
  }
  return Vocab::from_tokens(std::move(tokens));
}

int32_t EncodedExample::attended_length() const {
  int32_t n = 0;
  for (int32_t v : attention_mask) n += v;
  return n;
}

namespace {

class Builder {
 public:
  Builder(const Vocab& vocab, const EncodeOptions& options)
      : vocab_(vocab), options_(options) {}

  void push(int32_t id, int32_t segment, int32_t label, int32_t loss,
            int32_t eval) {
    out_.input_ids.push_back(id);
    out_.segment_ids.push_back(segment);
    out_.attention_mask.push_back(1);
    out_.labels.push_back(label);
    out_.loss_mask.push_back(loss);
    out_.eval_mask.push_back(eval);
  }

  // Appends sentence words until the budget runs out.
  void push_sentence(const std::vector<Word>& words,
                     std::span<const int32_t> labels, int32_t segment,
                     int32_t budget) {
    out_.word_map.assign(words.size(), -1);
    int32_t used = 0;
    bool truncating = false;
    for (size_t i = 0; i < words.size(); ++i) {
      const auto pieces = subword_tokenize(words[i].text, vocab_);
      if (truncating ||
          used + static_cast<int32_t>(pieces.size()) > budget) {
        truncating = true;
        ++out_.truncated_words;
        if (labels[i] != 0) ++out_.truncated_positive_words;
        continue;
      }
      out_.word_map[i] = out_.length();
      for (size_t p = 0; p < pieces.size(); ++p) {
        const bool first = p == 0;
        const bool supervised =
            first || options_.propagation == LabelPropagation::kAllSubtokens;
        push(pieces[p], segment, labels[i], supervised ? 1 : 0, first ? 1 : 0);
      }
      used += static_cast<int32_t>(pieces.size());
    }
  }

  EncodedExample finish() {
    while (out_.length() < options_.max_len) {
      out_.input_ids.push_back(vocab_.pad_id());
      out_.segment_ids.push_back(0);
      out_.attention_mask.push_back(0);
      out_.labels.push_back(0);
      out_.loss_mask.push_back(0);
      out_.eval_mask.push_back(0);
    }
    return std::move(out_);
  }

 private:
  const Vocab& vocab_;
  const EncodeOptions& options_;
  EncodedExample out_;
};

}  // namespace

EncodedExample encode(const PromptExample& example, const Vocab& vocab,
                      const EncodeOptions& options) {
  std::vector<int32_t> label_pieces;
  std::vector<int32_t> label_piece_labels;
  for (size_t i = 0; i < example.label_words.size(); ++i) {
    for (int32_t id : subword_tokenize(example.label_words[i], vocab)) {
      label_pieces.push_back(id);
      label_piece_labels.push_back(example.word_labels[i]);
    }
  }
  const auto fixed = static_cast<int32_t>(label_pieces.size()) + 3;
  if (fixed > options.max_len) {
    throw DataError("label \"" + example.query_class + "\" needs " +
                    std::to_string(fixed) + " positions but max_len is " +
                    std::to_string(options.max_len));
  }
  Builder b(vocab, options);
  b.push(vocab.cls_id(), 0, 0, 0, 0);
  const int32_t label_loss = options.label_segment_in_loss ? 1 : 0;
  for (size_t i = 0; i < label_pieces.size(); ++i) {
    b.push(label_pieces[i], 0, label_piece_labels[i], label_loss, 0);
  }
  b.push(vocab.sep_id(), 0, 0, 0, 0);
  const std::span<const int32_t> labels(example.word_labels);
  b.push_sentence(example.sentence_words, labels.subspan(example.label_words.size()),
                  1, options.max_len - fixed);
  b.push(vocab.sep_id(), 1, 0, 0, 0);
  return b.finish();
}

EncodedExample encode_multiclass(const MultiClassExample& example,
                                 const Vocab& vocab, const EncodeOptions& options) {
  if (options.max_len < 2) throw DataError("max_len must be at least 2");
  Builder b(vocab, options);
  b.push(vocab.cls_id(), 0, 0, 0, 0);
  b.push_sentence(example.sentence_words, example.word_labels, 0,
                  options.max_len - 2);
  b.push(vocab.sep_id(), 0, 0, 0, 0);
  return b.finish();
}

std::vector<int32_t> align_predictions(std::span<const int32_t> predictions,
                                       const EncodedExample& encoded) {
  if (static_cast<int32_t>(predictions.size()) != encoded.length()) {
    throw DataError("prediction length " + std::to_string(predictions.size()) +
                    " does not match encoded length " +
                    std::to_string(encoded.length()));
  }
  std::vector<int32_t> words(encoded.word_map.size(), 0);
  for (size_t i = 0; i < words.size(); ++i) {
    if (encoded.word_map[i] >= 0) words[i] = predictions[encoded.word_map[i]];
  }
  return words;
}

}  // namespace zsner
