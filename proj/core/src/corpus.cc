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

#include "zsner/corpus.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "zsner/error.h"
#include "zsner/text.h"

namespace zsner {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string describe(const EntitySpan& span) {
  return "(" + std::to_string(span.start) + "," + std::to_string(span.end) +
         ",\"" + span.class_name + "\")";
}

std::vector<std::string> normalize_inventory(std::vector<std::string> classes) {
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

// Returns a description of the first same-class overlap, or empty.
std::string find_same_class_overlap(const std::vector<EntitySpan>& spans) {
  for (size_t i = 0; i < spans.size(); ++i) {
    for (size_t j = i + 1; j < spans.size(); ++j) {
      if (spans[i].class_name == spans[j].class_name &&
          spans[i].overlaps(spans[j])) {
        return describe(spans[i]) + " and " + describe(spans[j]);
      }
    }
  }
  return {};
}

void validate_spans(const std::string& owner, int32_t text_length,
                    const std::vector<EntitySpan>& spans,
                    const std::vector<std::string>& inventory) {
  for (const auto& cls : inventory) {
    if (trim(cls).empty()) {
      throw DataError(owner + ": empty class name in inventory");
    }
  }
  for (const auto& span : spans) {
    if (span.start < 0 || span.start >= span.end || span.end > text_length) {
      throw DataError(owner + ": span " + describe(span) +
                      " out of bounds for text of length " +
                      std::to_string(text_length));
    }
    if (trim(span.class_name).empty()) {
      throw DataError(owner + ": span " + describe(span) +
                      " has an empty class name");
    }
    if (!std::binary_search(inventory.begin(), inventory.end(),
                            span.class_name)) {
      throw DataError(owner + ": span " + describe(span) + " uses class \"" +
                      span.class_name + "\" not in the class inventory");
    }
  }
  const auto overlap = find_same_class_overlap(spans);
  if (!overlap.empty()) {
    throw DataError(owner + ": overlapping same-class spans " + overlap);
  }
}

template <typename T>
T required(const json& obj, const char* field) {
  const auto it = obj.find(field);
  if (it == obj.end()) {
    throw DataError(std::string("missing field \"") + field + "\"");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("field \"") + field + "\" has the wrong type");
  }
}

Document parse_record(const std::string& line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed record: ") + e.what());
  }
  if (!obj.is_object()) throw DataError("malformed record: not an object");
  Document doc;
  doc.doc_id = required<std::string>(obj, "doc_id");
  if (doc.doc_id.empty()) throw DataError("empty doc_id");
  doc.dataset = required<std::string>(obj, "dataset");
  doc.text = required<std::string>(obj, "text");
  doc.class_inventory =
      normalize_inventory(required<std::vector<std::string>>(obj, "classes"));
  const auto annotations = required<json>(obj, "annotations");
  if (!annotations.is_array()) {
    throw DataError("field \"annotations\" must be an array");
  }
  for (const auto& a : annotations) {
    if (!a.is_object()) throw DataError("annotation must be an object");
    EntitySpan span;
    span.start = required<int32_t>(a, "start");
    span.end = required<int32_t>(a, "end");
    span.class_name = required<std::string>(a, "class");
    span.source_dataset = doc.dataset;
    doc.annotations.push_back(std::move(span));
  }
  return doc;
}

const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> kAbbreviations = {
      "e.g", "i.e", "dr",  "mr",  "mrs",    "ms",  "prof", "fig",
      "figs", "al", "vs",  "approx", "no",  "nos", "vol",  "ca",
      "cf",  "st",  "jr",  "sr",  "inc",    "ltd", "eq",   "ref",
      "resp", "dept", "sp", "spp", "viz",   "var", "ed",   "eds"};
  return kAbbreviations;
}

// The word ending just before position `end` (exclusive), lowercased and
// with leading punctuation stripped.
std::string word_before(const std::u32string& text, int32_t end) {
  int32_t start = end;
  while (start > 0 && !is_space(text[start - 1])) --start;
  while (start < end && is_punctuation(text[start])) ++start;
  std::u32string word;
  for (int32_t i = start; i < end; ++i) word.push_back(to_lower(text[i]));
  return encode_utf8(word);
}

bool is_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

bool is_closer(char32_t c) {
  return c == U')' || c == U']' || c == U'"' || c == U'\'' || c == 0x2019 ||
         c == 0x201D;
}

struct Gap {
  int32_t begin;  // first whitespace position
  int32_t end;    // first position of the next sentence
};

std::vector<Gap> candidate_boundaries(const std::u32string& text) {
  std::vector<Gap> gaps;
  const auto n = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < n) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    const int32_t term = i;
    int32_t j = i + 1;
    while (j < n && is_terminator(text[j])) ++j;
    while (j < n && is_closer(text[j])) ++j;
    i = j;
    if (j >= n || !is_space(text[j])) continue;
    int32_t q = j;
    while (q < n && is_space(text[q])) ++q;
    if (q >= n || !(is_upper(text[q]) || is_digit(text[q]))) continue;
    if (text[term] == U'.') {
      const auto word = word_before(text, term);
      if (abbreviations().count(word) > 0) continue;
      // Single-letter initials such as "J. Smith".
      if (decode_utf8(word).size() == 1 && !is_digit(word[0])) continue;
    }
    gaps.push_back({j, q});
  }
  return gaps;
}

std::vector<EntitySpan> remap_spans(const std::vector<EntitySpan>& spans,
                                    const std::map<std::string, std::string>& m) {
  std::vector<EntitySpan> out = spans;
  for (auto& span : out) {
    const auto it = m.find(span.class_name);
    if (it != m.end()) span.class_name = it->second;
  }
  return out;
}

std::vector<std::string> remap_inventory(const std::vector<std::string>& inv,
                                         const ClassMapping& m) {
  std::vector<std::string> out;
  out.reserve(inv.size());
  for (const auto& cls : inv) {
    const auto it = m.find(cls);
    out.push_back(it != m.end() ? it->second : cls);
  }
  return normalize_inventory(std::move(out));
}

void check_mapping(const ClassMapping& mapping) {
  for (const auto& [from, to] : mapping) {
    if (trim(to).empty()) {
      throw UsageError("class mapping for \"" + from + "\" has an empty target");
    }
  }
}

}  // namespace

void validate_document(const Document& doc) {
  if (doc.doc_id.empty()) throw DataError("document with empty doc_id");
  const std::string owner = "document \"" + doc.doc_id + "\"";
  int32_t length = 0;
  try {
    length = utf8_length(doc.text);
  } catch (const DataError& e) {
    throw DataError(owner + ": " + e.what());
  }
  if (!std::is_sorted(doc.class_inventory.begin(), doc.class_inventory.end())) {
    throw DataError(owner + ": class inventory is not sorted");
  }
  validate_spans(owner, length, doc.annotations, doc.class_inventory);
}

void validate_sentence(const Sentence& sentence) {
  const std::string owner = "sentence " + sentence.doc_id + "#" +
                            std::to_string(sentence.sent_index);
  validate_spans(owner, utf8_length(sentence.text), sentence.annotations,
                 sentence.class_inventory);
}

Corpus parse_corpus(std::istream& in, std::string_view source_name) {
  Corpus corpus;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  int64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::string where =
        std::string(source_name) + ":" + std::to_string(line_number);
    Document doc;
    try {
      doc = parse_record(line);
      validate_document(doc);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!seen_ids.insert(doc.doc_id).second) {
      throw DataError(where + ": duplicate doc_id \"" + doc.doc_id + "\"");
    }
    corpus.documents.push_back(std::move(doc));
  }
  if (in.bad()) throw IoError("failed reading " + std::string(source_name));
  return corpus;
}

Corpus parse_corpus_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_corpus(in);
}

void serialize_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.documents) {
    ordered_json obj;
    obj["doc_id"] = doc.doc_id;
    obj["dataset"] = doc.dataset;
    obj["text"] = doc.text;
    obj["classes"] = doc.class_inventory;
    auto annotations = ordered_json::array();
    for (const auto& span : doc.annotations) {
      ordered_json a;
      a["start"] = span.start;
      a["end"] = span.end;
      a["class"] = span.class_name;
      annotations.push_back(std::move(a));
    }
    obj["annotations"] = std::move(annotations);
    out << obj.dump() << '\n';
  }
}

std::string serialize_corpus_string(const Corpus& corpus) {
  std::ostringstream out;
  serialize_corpus(corpus, out);
  return out.str();
}

Corpus read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path);
  return parse_corpus(in, path);
}

void write_corpus_file(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus file " + path);
  serialize_corpus(corpus, out);
  if (!out) throw IoError("failed writing " + path);
}

Corpus read_conll(std::istream& in, std::string_view dataset,
                  std::string_view source_name) {
  struct Token {
    std::string text;
    std::string cls;  // empty = outside
    bool begins = false;
  };
  std::vector<std::vector<Token>> sentences;
  std::vector<int32_t> doc_numbers;
  std::vector<Token> current;
  int32_t doc_number = 0;
  std::set<std::string> classes;

  auto flush = [&] {
    if (!current.empty()) {
      sentences.push_back(std::move(current));
      doc_numbers.push_back(doc_number);
      current.clear();
    }
  };

  std::string line;
  int64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto trimmed = trim(line);
    if (trimmed.empty()) {
      flush();
      continue;
    }
    std::istringstream fields(trimmed);
    std::vector<std::string> columns;
    for (std::string f; fields >> f;) columns.push_back(f);
    const std::string where =
        std::string(source_name) + ":" + std::to_string(line_number);
    if (columns.front() == "-DOCSTART-") {
      flush();
      ++doc_number;
      continue;
    }
    if (columns.size() < 2) {
      throw DataError(where + ": expected `token tag`, got \"" + trimmed + "\"");
    }
    Token token{columns.front(), "", false};
    const std::string& tag = columns.back();
    if (tag != "O") {
      if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
        token.cls = tag.substr(2);
        token.begins = tag[0] == 'B';
      } else if (tag.size() > 2 && tag[1] == '-') {
        throw DataError(where + ": unsupported tag \"" + tag + "\"");
      } else {
        token.cls = tag;
      }
      classes.insert(token.cls);
    }
    current.push_back(std::move(token));
  }
  flush();

  Corpus corpus;
  const std::vector<std::string> inventory(classes.begin(), classes.end());
  int32_t sent_in_doc = 0;
  for (size_t s = 0; s < sentences.size(); ++s) {
    if (s > 0 && doc_numbers[s] != doc_numbers[s - 1]) sent_in_doc = 0;
    Document doc;
    char id[64];
    std::snprintf(id, sizeof(id), "-%04d-%04d", doc_numbers[s], sent_in_doc++);
    doc.doc_id = std::string(dataset) + id;
    doc.dataset = std::string(dataset);
    doc.class_inventory = inventory;
    int32_t offset = 0;
    bool open = false;
    for (const auto& token : sentences[s]) {
      if (!doc.text.empty()) {
        doc.text += ' ';
        ++offset;
      }
      const int32_t start = offset;
      doc.text += token.text;
      offset += utf8_length(token.text);
      if (token.cls.empty()) {
        open = false;
        continue;
      }
      if (open && !token.begins &&
          doc.annotations.back().class_name == token.cls) {
        doc.annotations.back().end = offset;
      } else {
        doc.annotations.push_back({start, offset, token.cls, doc.dataset});
      }
      open = true;
    }
    validate_document(doc);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

std::vector<Sentence> sentence_split(const Document& doc) {
  const std::u32string text = decode_utf8(doc.text);
  const auto n = static_cast<int32_t>(text.size());

  std::vector<Gap> gaps;
  for (const auto& gap : candidate_boundaries(text)) {
    const bool cuts_span = std::any_of(
        doc.annotations.begin(), doc.annotations.end(),
        [&](const EntitySpan& s) { return s.start < gap.end && s.end > gap.begin; });
    if (!cuts_span) gaps.push_back(gap);
  }

  std::vector<std::pair<int32_t, int32_t>> ranges;
  int32_t begin = 0;
  for (const auto& gap : gaps) {
    ranges.emplace_back(begin, gap.begin);
    begin = gap.end;
  }
  ranges.emplace_back(begin, n);

  std::vector<Sentence> sentences;
  for (auto [lo, hi] : ranges) {
    int32_t a = lo;
    int32_t b = hi;
    while (a < b && is_space(text[a])) ++a;
    while (b > a && is_space(text[b - 1])) --b;
    // Never trim into an annotation.
    for (const auto& span : doc.annotations) {
      if (span.start >= lo && span.end <= hi) {
        a = std::min(a, span.start);
        b = std::max(b, span.end);
      }
    }
    if (a >= b) continue;
    Sentence sentence;
    sentence.doc_id = doc.doc_id;
    sentence.sent_index = static_cast<int32_t>(sentences.size());
    sentence.dataset = doc.dataset;
    sentence.text = encode_utf8(std::u32string_view(text).substr(a, b - a));
    sentence.doc_offset = a;
    sentence.class_inventory = doc.class_inventory;
    for (const auto& span : doc.annotations) {
      if (span.start >= a && span.end <= b) {
        EntitySpan local = span;
        local.start -= a;
        local.end -= a;
        sentence.annotations.push_back(std::move(local));
      }
    }
    sentences.push_back(std::move(sentence));
  }
  return sentences;
}

SentenceCorpus split_corpus(const Corpus& corpus) {
  SentenceCorpus out;
  out.classes_merged = corpus.classes_merged;
  for (const auto& doc : corpus.documents) {
    auto sentences = sentence_split(doc);
    std::move(sentences.begin(), sentences.end(),
              std::back_inserter(out.sentences));
  }
  return out;
}

Corpus merge_classes(const Corpus& corpus, const ClassMapping& mapping) {
  check_mapping(mapping);
  Corpus out;
  out.classes_merged = true;
  out.documents.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    Document merged = doc;
    merged.annotations = remap_spans(doc.annotations, mapping);
    merged.class_inventory = remap_inventory(doc.class_inventory, mapping);
    const auto overlap = find_same_class_overlap(merged.annotations);
    if (!overlap.empty()) {
      throw DataError("class merge creates overlapping same-class spans in "
                      "document \"" + doc.doc_id + "\": " + overlap);
    }
    out.documents.push_back(std::move(merged));
  }
  return out;
}

SentenceCorpus merge_classes(const SentenceCorpus& corpus,
                             const ClassMapping& mapping) {
  check_mapping(mapping);
  SentenceCorpus out;
  out.classes_merged = true;
  out.sentences.reserve(corpus.sentences.size());
  for (const auto& sentence : corpus.sentences) {
    Sentence merged = sentence;
    merged.annotations = remap_spans(sentence.annotations, mapping);
    merged.class_inventory = remap_inventory(sentence.class_inventory, mapping);
    const auto overlap = find_same_class_overlap(merged.annotations);
    if (!overlap.empty()) {
      throw DataError("class merge creates overlapping same-class spans in "
                      "sentence " + sentence.doc_id + "#" +
                      std::to_string(sentence.sent_index) + ": " + overlap);
    }
    out.sentences.push_back(std::move(merged));
  }
  return out;
}

ClassMapping read_class_mapping(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open class mapping " + path);
  json obj;
  try {
    obj = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!obj.is_object()) throw DataError(path + ": mapping must be an object");
  ClassMapping mapping;
  for (const auto& [from, to] : obj.items()) {
    if (!to.is_string()) throw DataError(path + ": mapping values must be strings");
    mapping[from] = to.get<std::string>();
  }
  check_mapping(mapping);
  return mapping;
}

}  // namespace zsner
