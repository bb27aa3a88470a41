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
#include "zsner/prompt.h"
#include "zsner/subword.h"

namespace zsner {
namespace {

using testing::data_path;

Vocab toy_vocab() {
  return Vocab::from_tokens({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "disease",
                             "flu", "spreads", "hypo", "##tension", "hyp", "##o",
                             "chemical", "cell", "line", "."});
}

PromptExample prompt(const std::string& query, const std::vector<std::string>& words,
                     std::vector<int32_t> sentence_labels, LabelVariant variant) {
  PromptExample ex;
  ex.query_class = query;
  ex.variant = variant;
  const int32_t label_value = variant == LabelVariant::kLabelAsPositive ? 1 : 0;
  for (const auto& w : WordTokenizer().tokenize(query)) {
    ex.label_words.push_back(w.text);
    ex.word_labels.push_back(label_value);
  }
  int32_t pos = 0;
  for (const auto& w : words) {
    ex.sentence_words.push_back({w, pos, pos + static_cast<int32_t>(w.size())});
    pos += static_cast<int32_t>(w.size()) + 1;
  }
  ex.word_labels.insert(ex.word_labels.end(), sentence_labels.begin(), sentence_labels.end());
  return ex;
}

TEST_CASE("eight-line vocabulary gets ids in line order") {
  std::istringstream in("[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\na\nb\n##c\n");
  const auto vocab = load_vocab(in);
  CHECK(vocab.size() == 8);
  CHECK(vocab.pad_id() == 0);
  CHECK(vocab.mask_id() == 4);
  CHECK(vocab.find("##c") == 7);
  CHECK(vocab.find("zzz") == -1);
}

TEST_CASE("duplicate vocabulary lines are reported with line numbers") {
  std::istringstream in("[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\na\nb\na\n");
  try {
    load_vocab(in, "v.txt");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("6") != std::string::npos);
    CHECK(msg.find("8") != std::string::npos);
  }
  std::istringstream missing("[PAD]\n[UNK]\n[CLS]\n[MASK]\n");
  CHECK_THROWS_AS(load_vocab(missing), DataError);
}

TEST_CASE("greedy longest match") {
  const auto vocab = toy_vocab();
  CHECK(subword_tokenize("hypotension", vocab) ==
        std::vector<int32_t>{vocab.find("hypo"), vocab.find("##tension")});
  CHECK(subword_tokenize("flu", vocab) == std::vector<int32_t>{vocab.find("flu")});
  CHECK(subword_tokenize("Flu", vocab) == std::vector<int32_t>{vocab.find("flu")});
  CHECK(subword_tokenize("xyz", vocab) == std::vector<int32_t>{vocab.unk_id()});
  // "hypot" has no continuation for "t", so the whole word is unknown.
  CHECK(subword_tokenize("hypot", vocab) == std::vector<int32_t>{vocab.unk_id()});
}

TEST_CASE("bundled 2k vocabulary") {
  const auto vocab = load_vocab_file(data_path("vocab_2k.txt"));
  CHECK(vocab.size() == 2000);
  CHECK(vocab.find("hypotension") >= 0);
  CHECK(subword_tokenize("hypotension", vocab) ==
        std::vector<int32_t>{vocab.find("hypotension")});
  std::istringstream again(vocab.serialize());
  CHECK(load_vocab(again).tokens() == vocab.tokens());
  // Any lowercase ASCII word is covered by single-character pieces.
  for (int32_t id : subword_tokenize("qzxjw", vocab)) CHECK(id != vocab.unk_id());
}

TEST_CASE("build_vocab covers its words") {
  const auto vocab = build_vocab({"naloxone", "hypotension"}, 300);
  CHECK(vocab.size() <= 300);
  CHECK(vocab.find("naloxone") >= 0);
  CHECK(vocab.pad_id() == 0);
  CHECK(subword_tokenize("naloxone", vocab).size() == 1);
}

TEST_CASE("encode layout") {
  const auto vocab = toy_vocab();
  const auto ex = prompt("Disease", {"flu", "spreads"}, {1, 0}, LabelVariant::kLabelAsNegative);
  EncodeOptions options;
  options.max_len = 10;
  const auto enc = encode(ex, vocab, options);
  const int32_t pad = vocab.pad_id();
  CHECK(enc.input_ids == std::vector<int32_t>{vocab.cls_id(), vocab.find("disease"),
                                              vocab.sep_id(), vocab.find("flu"),
                                              vocab.find("spreads"), vocab.sep_id(), pad,
                                              pad, pad, pad});
  CHECK(enc.segment_ids == std::vector<int32_t>{0, 0, 0, 1, 1, 1, 0, 0, 0, 0});
  CHECK(enc.attention_mask == std::vector<int32_t>{1, 1, 1, 1, 1, 1, 0, 0, 0, 0});
  CHECK(enc.labels == std::vector<int32_t>{0, 0, 0, 1, 0, 0, 0, 0, 0, 0});
  CHECK(enc.loss_mask == std::vector<int32_t>{0, 1, 0, 1, 1, 0, 0, 0, 0, 0});
  CHECK(enc.eval_mask == std::vector<int32_t>{0, 0, 0, 1, 1, 0, 0, 0, 0, 0});
  CHECK(enc.word_map == std::vector<int32_t>{3, 4});
  CHECK(enc.attended_length() == 6);
}

TEST_CASE("label variant sets the label positions") {
  const auto vocab = toy_vocab();
  const auto neg = encode(prompt("Cell Line", {"flu"}, {1}, LabelVariant::kLabelAsNegative), vocab);
  const auto pos = encode(prompt("Cell Line", {"flu"}, {1}, LabelVariant::kLabelAsPositive), vocab);
  CHECK(neg.labels[1] == 0);
  CHECK(neg.labels[2] == 0);
  CHECK(pos.labels[1] == 1);
  CHECK(pos.labels[2] == 1);
  CHECK(neg.labels[4] == 1);

  EncodeOptions no_label_loss;
  no_label_loss.label_segment_in_loss = false;
  const auto quiet = encode(prompt("Cell Line", {"flu"}, {1}, LabelVariant::kLabelAsPositive), vocab,
                            no_label_loss);
  CHECK(quiet.loss_mask[1] == 0);
  CHECK(quiet.loss_mask[4] == 1);
}

TEST_CASE("label propagation over subtokens") {
  const auto vocab = toy_vocab();
  const auto ex = prompt("Disease", {"hypotension", "flu"}, {1, 0}, LabelVariant::kLabelAsNegative);
  const auto all = encode(ex, vocab);
  CHECK(all.labels[3] == 1);
  CHECK(all.labels[4] == 1);
  CHECK(all.loss_mask[4] == 1);
  CHECK(all.eval_mask[4] == 0);
  EncodeOptions first;
  first.propagation = LabelPropagation::kFirstSubtoken;
  const auto one = encode(ex, vocab, first);
  CHECK(one.labels[3] == 1);
  CHECK(one.loss_mask[4] == 0);
}

TEST_CASE("long sentences lose whole tail words") {
  const auto vocab = toy_vocab();
  const auto ex = prompt("Disease", {"flu", "hypotension", "spreads", "flu"}, {0, 1, 0, 1},
                         LabelVariant::kLabelAsNegative);
  EncodeOptions options;
  options.max_len = 7;  // room for three sentence pieces
  const auto enc = encode(ex, vocab, options);
  CHECK(enc.length() == 7);
  CHECK(enc.input_ids[1] == vocab.find("disease"));
  CHECK(enc.input_ids.back() == vocab.sep_id());
  CHECK(enc.word_map == std::vector<int32_t>{3, 4, -1, -1});
  CHECK(enc.truncated_words == 2);
  CHECK(enc.truncated_positive_words == 1);
  options.max_len = 3;
  CHECK_THROWS_AS(encode(ex, vocab, options), DataError);
}

TEST_CASE("align predictions") {
  const auto vocab = toy_vocab();
  const auto ex = prompt("Disease", {"hypotension", "flu", "spreads"}, {1, 0, 1},
                         LabelVariant::kLabelAsNegative);
  const auto enc = encode(ex, vocab);
  CHECK(align_predictions(enc.labels, enc) == ex.sentence_labels());
  const std::vector<int32_t> zeros(enc.length(), 0);
  CHECK(align_predictions(zeros, enc) == std::vector<int32_t>{0, 0, 0});
  // First piece 1, second piece 0: the word is positive.
  std::vector<int32_t> split(enc.length(), 0);
  split[3] = 1;
  CHECK(align_predictions(split, enc) == std::vector<int32_t>{1, 0, 0});
  split[3] = 0;
  split[4] = 1;
  CHECK(align_predictions(split, enc) == std::vector<int32_t>{0, 0, 0});
  CHECK_THROWS_AS(align_predictions(std::vector<int32_t>{1, 0}, enc), DataError);
}

TEST_CASE("multi-class encoding uses a single segment") {
  const auto vocab = toy_vocab();
  MultiClassExample ex;
  ex.sentence_words = {{"flu", 0, 3}, {"spreads", 4, 11}};
  ex.word_labels = {2, 0};
  EncodeOptions options;
  options.max_len = 6;
  const auto enc = encode_multiclass(ex, vocab, options);
  CHECK(enc.input_ids == std::vector<int32_t>{vocab.cls_id(), vocab.find("flu"),
                                              vocab.find("spreads"), vocab.sep_id(), 0, 0});
  CHECK(enc.segment_ids == std::vector<int32_t>(6, 0));
  CHECK(enc.labels[1] == 2);
}

TEST_CASE("property: encoded examples keep their invariants") {
  std::mt19937_64 rng(21);
  const auto vocab = load_vocab_file(data_path("vocab_2k.txt"));
  for (int trial = 0; trial < 40; ++trial) {
    const auto corpus = testing::random_corpus(rng, 8, 4);
    for (const auto& ex : expand_corpus(corpus, LabelVariant::kLabelAsPositive)) {
      EncodeOptions options;
      options.max_len = 8 + static_cast<int32_t>(rng() % 24);
      const auto enc = encode(ex, vocab, options);
      REQUIRE(enc.length() == options.max_len);
      const int32_t n = enc.attended_length();
      int seps = 0, changes = 0;
      for (int32_t i = 0; i < enc.length(); ++i) {
        CHECK(enc.attention_mask[i] == (i < n ? 1 : 0));
        if (i >= n) {
          CHECK(enc.input_ids[i] == vocab.pad_id());
          CHECK(enc.loss_mask[i] == 0);
          continue;
        }
        if (enc.input_ids[i] == vocab.sep_id()) ++seps;
        if (i > 0 && enc.segment_ids[i] != enc.segment_ids[i - 1]) ++changes;
        if (enc.loss_mask[i] == 0) CHECK(enc.labels[i] == 0);
      }
      CHECK(seps == 2);
      CHECK(changes == 1);
      CHECK(enc.word_map.size() == ex.sentence_words.size());
      // Gold labels survive the round trip for every word that fit.
      const auto words = align_predictions(enc.labels, enc);
      const auto gold = ex.sentence_labels();
      for (size_t w = 0; w < words.size(); ++w) {
        if (enc.word_map[w] >= 0) CHECK(words[w] == gold[w]);
      }
    }
  }
}

}  // namespace
}  // namespace zsner
