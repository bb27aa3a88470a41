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

#ifndef ZSNER_CORPUS_H_
#define ZSNER_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace zsner {

// An annotated mention. Offsets are in Unicode scalar values, [start, end).
struct EntitySpan {
  int32_t start = 0;
  int32_t end = 0;
  std::string class_name;
  std::string source_dataset;

  int32_t length() const { return end - start; }
  bool overlaps(const EntitySpan& other) const {
    return start < other.end && other.start < end;
  }
  bool operator==(const EntitySpan&) const = default;
};

struct Document {
  std::string doc_id;
  std::string dataset;
  std::string text;
  std::vector<EntitySpan> annotations;
  // Classes the source dataset annotates; sorted and unique.
  std::vector<std::string> class_inventory;

  bool operator==(const Document&) const = default;
};

struct Sentence {
  std::string doc_id;
  int32_t sent_index = 0;
  std::string dataset;
  std::string text;
  // Offset of text within the owning document.
  int32_t doc_offset = 0;
  std::vector<EntitySpan> annotations;
  std::vector<std::string> class_inventory;

  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  std::vector<Document> documents;
  bool classes_merged = false;

  bool operator==(const Corpus&) const = default;
};

struct SentenceCorpus {
  std::vector<Sentence> sentences;
  bool classes_merged = false;

  bool operator==(const SentenceCorpus&) const = default;
};

using ClassMapping = std::map<std::string, std::string>;

// Reads the canonical line-oriented corpus format (one JSON object per line).
// Errors carry `source_name:line` and the offending doc_id.
Corpus parse_corpus(std::istream& in, std::string_view source_name = "<input>");
Corpus parse_corpus_string(std::string_view text);
void serialize_corpus(const Corpus& corpus, std::ostream& out);
std::string serialize_corpus_string(const Corpus& corpus);

Corpus read_corpus_file(const std::string& path);
void write_corpus_file(const Corpus& corpus, const std::string& path);

// Reads two-column `token tag` files using IO or BIO tags. A blank line ends
// a sentence; `-DOCSTART-` lines start a new document. Every class that
// occurs in the file joins the inventory of every document.
Corpus read_conll(std::istream& in, std::string_view dataset,
                  std::string_view source_name = "<conll>");

// Checks every Document invariant and throws DataError on the first failure.
void validate_document(const Document& doc);
void validate_sentence(const Sentence& sentence);

// Rule-based sentence splitter. A boundary is a terminator in {. ! ?}
// followed by whitespace and an uppercase letter or digit, unless the word
// before the terminator is a known abbreviation. Boundaries that would cut
// an annotation are dropped, merging the neighbouring sentences.
std::vector<Sentence> sentence_split(const Document& doc);
SentenceCorpus split_corpus(const Corpus& corpus);

// Rewrites class names and inventories through `mapping`; names missing
// from the mapping are kept. Throws DataError if the rewrite makes two
// same-class spans overlap.
Corpus merge_classes(const Corpus& corpus, const ClassMapping& mapping);
SentenceCorpus merge_classes(const SentenceCorpus& corpus,
                             const ClassMapping& mapping);

ClassMapping read_class_mapping(const std::string& path);

}  // namespace zsner

#endif  // ZSNER_CORPUS_H_
