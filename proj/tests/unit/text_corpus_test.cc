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
#include <string>

#include "test_util.h"
#include "zsner/corpus.h"
#include "zsner/error.h"
#include "zsner/stats.h"
#include "zsner/synthetic.h"
#include "zsner/text.h"

namespace zsner {
namespace {

using testing::data_path;
using testing::read_text;

TEST_CASE("utf8 decode and encode round trip") {
  const std::string text = "Café αβ 𝛼";
  const auto cps = decode_utf8(text);
  CHECK(cps.size() == 9);
  CHECK(encode_utf8(cps) == text);
  CHECK(utf8_length("naïve") == 5);
  CHECK_THROWS_AS(decode_utf8("\xC3"), DataError);
  CHECK_THROWS_AS(decode_utf8("\xC0\xAF"), DataError);
  CHECK_THROWS_AS(decode_utf8("\xED\xA0\x80"), DataError);
}

TEST_CASE("word tokenizer isolates punctuation with code point offsets") {
  const auto words = WordTokenizer().tokenize("Café (IL-2) works.");
  std::vector<std::string> texts;
  for (const auto& w : words) texts.push_back(w.text);
  CHECK(texts == std::vector<std::string>{"Café", "(", "IL", "-", "2", ")", "works", "."});
  CHECK(words[0].start == 0);
  CHECK(words[0].end == 4);
  CHECK(words[1].start == 5);
  CHECK(words.back().start == 17);

  const auto whole = WordTokenizer(false).tokenize("IL-2 works.");
  REQUIRE(whole.size() == 2);
  CHECK(whole[0].text == "IL-2");
  CHECK(whole[1].text == "works.");
}

TEST_CASE("parse a minimal record") {
  const auto corpus = parse_corpus_string(
      R"({"doc_id":"a","dataset":"x","text":"X binds Y","classes":["Gene"],)"
      R"("annotations":[{"start":0,"end":1,"class":"Gene"}]})");
  REQUIRE(corpus.documents.size() == 1);
  const auto& doc = corpus.documents[0];
  REQUIRE(doc.annotations.size() == 1);
  CHECK(doc.annotations[0].start == 0);
  CHECK(doc.annotations[0].end == 1);
  CHECK(doc.annotations[0].class_name == "Gene");
  CHECK(doc.annotations[0].source_dataset == "x");
}

TEST_CASE("span past the end of the text names the document and span") {
  try {
    parse_corpus_string(
        R"({"doc_id":"bad7","dataset":"x","text":"short","classes":["Gene"],)"
        R"("annotations":[{"start":2,"end":9,"class":"Gene"}]})");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bad7") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
    CHECK(msg.find("9") != std::string::npos);
  }
}

TEST_CASE("malformed records are rejected") {
  CHECK_THROWS_AS(parse_corpus_string("{not json"), DataError);
  // Class outside the inventory.
  CHECK_THROWS_AS(
      parse_corpus_string(
          R"({"doc_id":"a","dataset":"x","text":"abc","classes":["Gene"],)"
          R"("annotations":[{"start":0,"end":1,"class":"Drug"}]})"),
      DataError);
  // Same-class overlap.
  CHECK_THROWS_AS(
      parse_corpus_string(
          R"({"doc_id":"a","dataset":"x","text":"abcdef","classes":["Gene"],)"
          R"("annotations":[{"start":0,"end":3,"class":"Gene"},)"
          R"({"start":2,"end":4,"class":"Gene"}]})"),
      DataError);
  // Empty span.
  CHECK_THROWS_AS(
      parse_corpus_string(
          R"({"doc_id":"a","dataset":"x","text":"abc","classes":["Gene"],)"
          R"("annotations":[{"start":1,"end":1,"class":"Gene"}]})"),
      DataError);
}

TEST_CASE("bundled three-document fixture") {
  const auto corpus = read_corpus_file(data_path("three_docs.jsonl"));
  REQUIRE(corpus.documents.size() == 3);
  size_t spans = 0;
  for (const auto& d : corpus.documents) spans += d.annotations.size();
  CHECK(spans == 5);
  // The Dosage span counts code points, so the accented letter is one unit.
  const auto& d3 = corpus.documents[2];
  CHECK(d3.annotations[0].start == 19);
  CHECK(d3.annotations[0].end == 24);
  const auto text = decode_utf8(d3.text);
  CHECK(encode_utf8(text.substr(19, 5)) == "20 mg");
}

TEST_CASE("serialize and parse round trip") {
  const auto corpus = read_corpus_file(data_path("three_docs.jsonl"));
  const auto text = serialize_corpus_string(corpus);
  CHECK(parse_corpus_string(text) == corpus);
  CHECK(serialize_corpus_string(parse_corpus_string(text)) == text);
}

TEST_CASE("sentence split keeps spans inside sentences") {
  Document doc{"d", "x", "Aspirin helps. Fever drops.", {{0, 7, "Drug", "x"}}, {"Drug"}};
  const auto sentences = sentence_split(doc);
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[0].text == "Aspirin helps.");
  REQUIRE(sentences[0].annotations.size() == 1);
  CHECK(sentences[0].annotations[0].start == 0);
  CHECK(sentences[0].annotations[0].end == 7);
  CHECK(sentences[1].text == "Fever drops.");
  CHECK(sentences[1].doc_offset == 15);
  CHECK(sentences[1].sent_index == 1);
  CHECK(sentences[1].class_inventory == std::vector<std::string>{"Drug"});
}

TEST_CASE("sentence without terminator is returned unchanged") {
  Document doc{"d", "x", "no terminator here", {}, {"Drug"}};
  const auto sentences = sentence_split(doc);
  REQUIRE(sentences.size() == 1);
  CHECK(sentences[0].text == doc.text);
  CHECK(sentences[0].doc_offset == 0);
}

TEST_CASE("span across a boundary merges the sentences") {
  // "helps. Fever" is [8, 20).
  Document doc{"d", "x", "Aspirin helps. Fever drops.", {{8, 20, "Drug", "x"}}, {"Drug"}};
  const auto sentences = sentence_split(doc);
  REQUIRE(sentences.size() == 1);
  CHECK(sentences[0].text == doc.text);
  CHECK(sentences[0].annotations[0].start == 8);
}

TEST_CASE("abbreviations and initials do not end sentences") {
  Document doc{"d", "x", "See Fig. 2 for details. J. Smith agreed.", {}, {"Drug"}};
  const auto sentences = sentence_split(doc);
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[0].text == "See Fig. 2 for details.");
  CHECK(sentences[1].text == "J. Smith agreed.");
}

TEST_CASE("merge unifies dataset-specific class names") {
  Corpus corpus;
  corpus.documents.push_back(
      {"a", "biored", "hela cells", {{0, 4, "Cell Line (BioRED)", "biored"}}, {"Cell Line (BioRED)"}});
  corpus.documents.push_back(
      {"b", "jnlpba", "jurkat cells", {{0, 6, "Cell Line (JNLPBA)", "jnlpba"}}, {"Cell Line (JNLPBA)"}});
  const ClassMapping mapping = {{"Cell Line (BioRED)", "Cell Line"},
                                {"Cell Line (JNLPBA)", "Cell Line"}};
  const auto merged = merge_classes(corpus, mapping);
  CHECK(merged.classes_merged);
  for (const auto& doc : merged.documents) {
    CHECK(doc.annotations[0].class_name == "Cell Line");
    CHECK(doc.class_inventory == std::vector<std::string>{"Cell Line"});
  }
}

TEST_CASE("identity merge leaves the corpus unchanged") {
  auto corpus = read_corpus_file(data_path("three_docs.jsonl"));
  const auto merged = merge_classes(corpus, {{"Chemical", "Chemical"}});
  CHECK(merged.documents == corpus.documents);
}

TEST_CASE("merge creating same-class overlap fails") {
  Corpus corpus;
  corpus.documents.push_back({"a",
                              "x",
                              "breast cancer",
                              {{0, 13, "Disease", "x"}, {7, 13, "Cancer", "x"}},
                              {"Cancer", "Disease"}});
  CHECK_THROWS_AS(merge_classes(corpus, {{"Cancer", "Disease"}}), DataError);
}

TEST_CASE("conll reader builds documents with code point offsets") {
  std::istringstream in(
      "-DOCSTART- O\n\nNaloxone B-Chemical\nreverses O\nhypotension B-Disease\n. O\n\n"
      "Café O\nbreast B-Disease\ncancer I-Disease\n\n");
  const auto corpus = read_conll(in, "cdr");
  REQUIRE(corpus.documents.size() == 2);
  const auto& first = corpus.documents[0];
  CHECK(first.text == "Naloxone reverses hypotension .");
  REQUIRE(first.annotations.size() == 2);
  CHECK(first.annotations[1].start == 18);
  CHECK(first.annotations[1].end == 29);
  const auto& second = corpus.documents[1];
  REQUIRE(second.annotations.size() == 1);
  CHECK(second.annotations[0].start == 5);
  CHECK(second.annotations[0].end == 18);
  CHECK(first.class_inventory == std::vector<std::string>{"Chemical", "Disease"});
}

TEST_CASE("empty corpus gives empty stats") {
  const auto stats = compute_stats(SentenceCorpus{});
  CHECK(stats.classes.empty());
  CHECK(stats.sentence_count == 0);
  CHECK(format_stats_tsv(stats) == "Class\tA\tB\tC\n");
}

TEST_CASE("stats of the synthetic fixture match the counting script") {
  const auto corpus = split_corpus(read_corpus_file(data_path("synthetic_fixture.jsonl")));
  CHECK(format_stats_tsv(compute_stats(corpus)) ==
        read_text(data_path("synthetic_fixture_stats.tsv")));
}

TEST_CASE("stats count a token once per class") {
  SentenceCorpus corpus;
  corpus.sentences.push_back({"d", 0, "x", "IL-2 binds", 0,
                              {{0, 2, "Gene", "x"}, {1, 4, "Protein", "x"}},
                              {"Gene", "Protein"}});
  const auto stats = compute_stats(corpus);
  // Words: IL, -, 2, binds.
  CHECK(stats.classes.at("Gene").labeled_token_count == 1);
  CHECK(stats.classes.at("Protein").labeled_token_count == 3);
  CHECK(stats.classes.at("Protein").total_token_count == 4);
  CHECK(stats.classes.at("Protein").labeled_token_percentage() == doctest::Approx(75.0));
}

TEST_CASE("synthetic dosage pattern") {
  SyntheticSpec spec;
  spec.sentence_count = 30;
  spec.max_sentences_per_document = 1;
  spec.classes = {{"Dosage", {PatternElement::number(1, 500), PatternElement::literal({"mg", "ml"})}}};
  spec.datasets = {{"n2c2", {"Dosage"}, {"Take <Dosage> daily ."}}};
  const auto corpus = generate_synthetic(spec);
  REQUIRE(corpus.documents.size() == 30);
  for (const auto& doc : corpus.documents) {
    REQUIRE(doc.annotations.size() == 1);
    const auto& span = doc.annotations[0];
    const auto mention = encode_utf8(decode_utf8(doc.text).substr(span.start, span.length()));
    CHECK(doc.text == "Take " + mention + " daily .");
    const auto space = mention.find(' ');
    REQUIRE(space != std::string::npos);
    const int value = std::stoi(mention.substr(0, space));
    CHECK(value >= 1);
    CHECK(value <= 500);
    const auto unit = mention.substr(space + 1);
    CHECK((unit == "mg" || unit == "ml"));
  }
}

TEST_CASE("synthetic generation is deterministic per seed") {
  const auto a = serialize_corpus_string(generate_synthetic(default_synthetic_spec(200, 3)));
  const auto b = serialize_corpus_string(generate_synthetic(default_synthetic_spec(200, 3)));
  const auto c = serialize_corpus_string(generate_synthetic(default_synthetic_spec(200, 4)));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("synthetic corpus validates and sentence counts match") {
  const auto spec = default_synthetic_spec(300, 1);
  const auto corpus = generate_synthetic(spec);
  for (const auto& doc : corpus.documents) CHECK_NOTHROW(validate_document(doc));
  CHECK(split_corpus(corpus).sentences.size() == 300);
}

TEST_CASE("default spec carries synonym pairs") {
  const auto pairs = synonym_pairs(default_synthetic_spec());
  const std::pair<std::string, std::string> disease{"Disease", "Specific Disease"};
  CHECK(std::find(pairs.begin(), pairs.end(), disease) != pairs.end());
}

TEST_CASE("unsatisfiable templates are rejected") {
  SyntheticSpec spec;
  spec.sentence_count = 1;
  spec.classes = {{"Drug", {PatternElement::literal({"aspirin"})}}};
  spec.datasets = {{"x", {"Drug"}, {"Take <Dose> now ."}}};
  CHECK_THROWS_AS(generate_synthetic(spec), DataError);
  spec.datasets = {{"x", {"Drug"}, {"Take <Drug> {when} ."}}};
  CHECK_THROWS_AS(generate_synthetic(spec), DataError);
  spec.classes = {{"Drug", {PatternElement::number(5, 1)}}};
  spec.datasets = {{"x", {"Drug"}, {"Take <Drug> ."}}};
  CHECK_THROWS_AS(generate_synthetic(spec), DataError);
}

TEST_CASE("property: random corpora survive serialization and splitting") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Corpus corpus;
    const auto sc = testing::random_corpus(rng, 6, 3);
    for (const auto& s : sc.sentences) {
      if (s.sent_index != 0) continue;
      Document doc{s.doc_id, s.dataset, s.text, s.annotations, s.class_inventory};
      validate_document(doc);
      corpus.documents.push_back(std::move(doc));
    }
    const auto text = serialize_corpus_string(corpus);
    REQUIRE(parse_corpus_string(text) == corpus);
    for (const auto& doc : corpus.documents) {
      size_t spans = 0;
      for (const auto& s : sentence_split(doc)) {
        CHECK_NOTHROW(validate_sentence(s));
        spans += s.annotations.size();
      }
      CHECK(spans == doc.annotations.size());
    }
  }
}

}  // namespace
}  // namespace zsner
