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

#include "zsner/synthetic.h"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

#include "zsner/error.h"
#include "zsner/text.h"

namespace zsner {
namespace {

struct Piece {
  enum class Kind { kLiteral, kEntity, kFiller };
  Kind kind;
  std::string value;
};

std::vector<Piece> parse_template(const std::string& tpl) {
  std::vector<Piece> pieces;
  std::string literal;
  size_t i = 0;
  while (i < tpl.size()) {
    const char open = tpl[i];
    if (open == '<' || open == '{') {
      const char close = open == '<' ? '>' : '}';
      const auto end = tpl.find(close, i + 1);
      if (end == std::string::npos) {
        throw DataError("unterminated slot in template \"" + tpl + "\"");
      }
      if (!literal.empty()) {
        pieces.push_back({Piece::Kind::kLiteral, literal});
        literal.clear();
      }
      pieces.push_back({open == '<' ? Piece::Kind::kEntity : Piece::Kind::kFiller,
                        tpl.substr(i + 1, end - i - 1)});
      i = end + 1;
    } else {
      literal.push_back(tpl[i++]);
    }
  }
  if (!literal.empty()) pieces.push_back({Piece::Kind::kLiteral, literal});
  return pieces;
}

class Generator {
 public:
  explicit Generator(const SyntheticSpec& spec) : spec_(spec), rng_(spec.seed) {
    if (spec.sentence_count < 0) throw DataError("negative sentence count");
    if (spec.max_sentences_per_document < 1) {
      throw DataError("max_sentences_per_document must be at least 1");
    }
    if (spec.datasets.empty() && spec.sentence_count > 0) {
      throw DataError("synthetic spec has no datasets");
    }
    for (const auto& cls : spec.classes) {
      if (trim(cls.name).empty()) throw DataError("class with empty name");
      if (cls.elements.empty()) {
        throw DataError("class \"" + cls.name + "\" has an empty pattern");
      }
      for (const auto& el : cls.elements) {
        if (el.kind == PatternElement::Kind::kPool && el.pool.empty()) {
          throw DataError("class \"" + cls.name + "\" has an empty pool");
        }
        if (el.kind == PatternElement::Kind::kNumber &&
            el.min_value > el.max_value) {
          throw DataError("class \"" + cls.name + "\" has an empty number range");
        }
      }
      patterns_[cls.name] = &cls;
    }
    for (const auto& [name, pool] : spec.fillers) {
      if (pool.empty()) throw DataError("filler {" + name + "} is empty");
    }
    for (const auto& ds : spec.datasets) {
      if (ds.templates.empty()) {
        throw DataError("dataset \"" + ds.name + "\" has no templates");
      }
      std::vector<std::vector<Piece>> parsed;
      for (const auto& tpl : ds.templates) {
        auto pieces = parse_template(tpl);
        // Documents join several sentences; the splitter only breaks before
        // an uppercase letter or digit.
        if (spec.max_sentences_per_document > 1) {
          const auto head = pieces.empty() || pieces[0].kind != Piece::Kind::kLiteral
                                ? std::u32string()
                                : decode_utf8(pieces[0].value);
          if (head.empty() || !(is_upper(head[0]) || is_digit(head[0]))) {
            throw DataError("unsatisfiable template \"" + tpl +
                            "\": multi-sentence documents need a capitalized first word");
          }
        }
        for (const auto& piece : pieces) {
          if (piece.kind == Piece::Kind::kEntity &&
              (!patterns_.count(piece.value) ||
               std::find(ds.classes.begin(), ds.classes.end(), piece.value) ==
                   ds.classes.end())) {
            throw DataError("unsatisfiable template \"" + tpl + "\": class \"" +
                            piece.value + "\" is not defined for dataset \"" +
                            ds.name + "\"");
          }
          if (piece.kind == Piece::Kind::kFiller &&
              !spec.fillers.count(piece.value)) {
            throw DataError("unsatisfiable template \"" + tpl +
                            "\": unknown filler {" + piece.value + "}");
          }
        }
        parsed.push_back(std::move(pieces));
      }
      templates_.push_back(std::move(parsed));
    }
  }

  Corpus run() {
    Corpus corpus;
    int32_t produced = 0;
    int32_t doc_index = 0;
    const auto num_datasets = static_cast<int32_t>(spec_.datasets.size());
    while (produced < spec_.sentence_count) {
      const int32_t ds_index = doc_index % num_datasets;
      const auto& ds = spec_.datasets[ds_index];
      const int32_t k = std::min(uniform(1, spec_.max_sentences_per_document),
                                 spec_.sentence_count - produced);
      Document doc;
      char id[32];
      std::snprintf(id, sizeof(id), "-%05d", doc_index);
      doc.doc_id = "synth-" + ds.name + id;
      doc.dataset = ds.name;
      doc.class_inventory = ds.classes;
      std::sort(doc.class_inventory.begin(), doc.class_inventory.end());
      doc.class_inventory.erase(
          std::unique(doc.class_inventory.begin(), doc.class_inventory.end()),
          doc.class_inventory.end());
      std::u32string text;
      const auto& tpls = templates_[ds_index];
      for (int32_t s = 0; s < k; ++s) {
        if (!text.empty()) text.push_back(U' ');
        const auto& pieces = tpls[uniform(0, static_cast<int32_t>(tpls.size()) - 1)];
        render(pieces, ds.name, text, doc.annotations);
      }
      doc.text = encode_utf8(text);
      validate_document(doc);
      corpus.documents.push_back(std::move(doc));
      produced += k;
      ++doc_index;
    }
    return corpus;
  }

 private:
  int32_t uniform(int32_t lo, int32_t hi) {
    return std::uniform_int_distribution<int32_t>(lo, hi)(rng_);
  }

  const std::string& pick(const std::vector<std::string>& pool) {
    return pool[uniform(0, static_cast<int32_t>(pool.size()) - 1)];
  }

  void render(const std::vector<Piece>& pieces, const std::string& dataset,
              std::u32string& text, std::vector<EntitySpan>& spans) {
    for (const auto& piece : pieces) {
      switch (piece.kind) {
        case Piece::Kind::kLiteral:
          text += decode_utf8(piece.value);
          break;
        case Piece::Kind::kFiller:
          text += decode_utf8(pick(spec_.fillers.at(piece.value)));
          break;
        case Piece::Kind::kEntity: {
          const auto start = static_cast<int32_t>(text.size());
          std::string surface;
          for (const auto& el : patterns_.at(piece.value)->elements) {
            if (!surface.empty()) surface += ' ';
            surface += el.kind == PatternElement::Kind::kPool
                           ? pick(el.pool)
                           : std::to_string(uniform(el.min_value, el.max_value));
          }
          text += decode_utf8(surface);
          spans.push_back({start, static_cast<int32_t>(text.size()), piece.value,
                           dataset});
          break;
        }
      }
    }
  }

  const SyntheticSpec& spec_;
  std::mt19937_64 rng_;
  std::map<std::string, const ClassPattern*> patterns_;
  std::vector<std::vector<std::vector<Piece>>> templates_;
};

std::set<std::string> lowercase_words(const std::string& text) {
  std::set<std::string> out;
  for (const auto& word : WordTokenizer().tokenize(text)) {
    std::u32string lower;
    for (char32_t c : decode_utf8(word.text)) lower.push_back(to_lower(c));
    out.insert(encode_utf8(lower));
  }
  return out;
}

const std::vector<std::string> kDiseases = {
    "hypotension", "asthma",        "diabetes",      "migraine",
    "nephropathy", "hepatitis",     "arthritis",     "sepsis",
    "anemia",      "heart failure", "renal failure", "breast cancer",
    "lung cancer", "epilepsy",      "psoriasis",     "leukemia"};
const std::vector<std::string> kChemicals = {
    "naloxone", "cisplatin", "caffeine",    "ethanol",
    "lithium",  "dopamine",  "nicotine",    "cocaine",
    "morphine", "haloperidol", "nitric oxide", "hydrogen peroxide"};
const std::vector<std::string> kProteins = {
    "interleukin 2", "nf kappa b", "tnf alpha", "stat3", "c-jun", "cyclin d1", "ap-1"};
const std::vector<std::string> kDrugs = {
    "aspirin",  "ibuprofen",    "metformin",   "lisinopril", "warfarin",
    "insulin", "atorvastatin", "amoxicillin", "prednisone", "omeprazole"};
const std::vector<std::string> kGenes = {"brca1", "tp53", "apoe",  "cftr", "egfr",
                                         "kras",  "mlh1", "pten", "huntingtin"};

}  // namespace

Corpus generate_synthetic(const SyntheticSpec& spec) {
  return Generator(spec).run();
}

SyntheticSpec default_synthetic_spec(int32_t sentence_count, uint64_t seed) {
  using E = PatternElement;
  SyntheticSpec spec;
  spec.sentence_count = sentence_count;
  spec.seed = seed;
  spec.classes = {
      {"Disease", {E::literal(kDiseases)}},
      {"Specific Disease", {E::literal(kDiseases)}},
      {"Chemical", {E::literal(kChemicals)}},
      {"Specific Chemical", {E::literal(kChemicals)}},
      {"Gene", {E::literal(kGenes)}},
      {"Specific Gene", {E::literal(kGenes)}},
      {"Cell Line",
       {E::literal({"hela", "jurkat", "mcf-7", "hek293", "a549", "u937"})}},
      {"Drug", {E::literal(kDrugs)}},
      {"Specific Drug", {E::literal(kDrugs)}},
      {"Dosage",
       {E::number(1, 1000), E::literal({"mg", "ml", "mcg", "units", "g"})}},
      {"Protein", {E::literal(kProteins)}},
      {"Specific Protein", {E::literal(kProteins)}},
      {"Cell Type",
       {E::literal({"t cells", "monocytes", "b cells", "macrophages",
                    "lymphocytes", "neutrophils"})}},
  };
  spec.fillers = {
      {"frequency", {"daily", "twice daily", "at night", "weekly"}},
      {"outcome", {"improved", "worsened", "resolved", "persisted"}},
      {"gene", kGenes},
  };
  spec.datasets = {
      {"cdr",
       {"Chemical", "Disease"},
       {"Treatment with <Chemical> caused <Disease> in rats .",
        "The <Disease> was induced by <Chemical> .",
        "Patients with <Disease> received <Chemical> .",
        "Exposure to <Chemical> was measured .",
        "Symptoms of <Disease> {outcome} slowly .",
        "Carriers of {gene} variants developed <Disease> .",
        "Mutations in {gene} cause <Disease> .",
        "The <Disease> phenotype was linked to {gene} .",
        "No adverse events were reported ."}},
      {"ncbi",
       {"Gene", "Specific Disease"},
       {"Mutations in <Gene> cause <Specific Disease> .",
        "The <Specific Disease> phenotype was linked to <Gene> .",
        "Patients with <Specific Disease> were screened .",
        "Expression of <Gene> was reduced .",
        "Families were recruited for this study ."}},
      {"biored",
       {"Cell Line", "Specific Chemical"},
       {"The <Specific Chemical> reduced growth of <Cell Line> cells .",
        "Treatment of <Cell Line> with <Specific Chemical> was effective .",
        "We measured <Specific Chemical> levels in plasma .",
        "Cultured <Cell Line> cells were harvested .",
        "Results were consistent across replicates ."}},
      {"n2c2",
       {"Dosage", "Drug"},
       {"Take <Dosage> of <Drug> {frequency} .",
        "Patient was started on <Drug> <Dosage> .",
        "Continue <Drug> as prescribed .",
        "Dose was increased to <Dosage> {frequency} .",
        "Follow up in two weeks ."}},
      {"jnlpba",
       {"Cell Type", "Protein"},
       {"Activation of <Protein> was observed in <Cell Type> .",
        "The <Protein> binds the promoter .",
        "Human <Cell Type> express <Protein> .",
        "Cells were stimulated overnight ."}},
      {"pharmgkb",
       {"Specific Gene", "Drug"},
       {"Variants of <Specific Gene> alter response to <Drug> .",
        "The <Drug> dose depends on <Specific Gene> status .",
        "Carriers of <Specific Gene> variants were genotyped .",
        "Patients received <Drug> after screening .",
        "Samples were stored at low temperature ."}},
      {"chemprot",
       {"Chemical", "Specific Protein"},
       {"Compound <Chemical> inhibits <Specific Protein> activity .",
        "Binding of <Chemical> to <Specific Protein> was weak .",
        "The <Specific Protein> level rose after treatment .",
        "Assays were repeated three times ."}},
      {"medline",
       {"Disease", "Specific Drug"},
       {"Clinicians use <Specific Drug> to treat <Disease> .",
        "Patients with <Disease> were given <Specific Drug> .",
        "The <Specific Drug> trial enrolled adults .",
        "Loss of {gene} was common in <Disease> .",
        "Outcomes were assessed at baseline ."}},
  };
  return spec;
}

SyntheticSpec pilot_synthetic_spec(int32_t sentence_count, uint64_t seed) {
  using E = PatternElement;
  SyntheticSpec spec;
  spec.sentence_count = sentence_count;
  spec.seed = seed;
  spec.max_sentences_per_document = 1;
  spec.classes = {
      {"Chemical", {E::literal(kChemicals)}},
      {"Disease", {E::literal(kDiseases)}},
      {"Dosage", {E::number(1, 1000), E::literal({"mg", "ml", "mcg"})}},
  };
  spec.datasets = {
      {"pilot",
       {"Chemical", "Disease", "Dosage"},
       {"Treatment with <Chemical> caused <Disease> .",
        "Patients with <Disease> received <Dosage> of <Chemical> .",
        "The <Disease> worsened after <Dosage> .",
        "Exposure to <Chemical> was measured .",
        "No adverse events were reported ."}},
  };
  return spec;
}

std::vector<std::pair<std::string, std::string>> synonym_pairs(
    const SyntheticSpec& spec) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (size_t i = 0; i < spec.classes.size(); ++i) {
    for (size_t j = i + 1; j < spec.classes.size(); ++j) {
      const auto& a = spec.classes[i];
      const auto& b = spec.classes[j];
      if (a.elements != b.elements) continue;
      const auto wa = lowercase_words(a.name);
      const auto wb = lowercase_words(b.name);
      const bool shared = std::any_of(
          wa.begin(), wa.end(), [&](const std::string& w) { return wb.count(w); });
      if (shared) pairs.emplace_back(a.name, b.name);
    }
  }
  return pairs;
}

std::vector<std::string> synthetic_words(const SyntheticSpec& spec) {
  std::set<std::string> words;
  auto add = [&](const std::string& text) {
    const auto w = lowercase_words(text);
    words.insert(w.begin(), w.end());
  };
  for (const auto& cls : spec.classes) {
    add(cls.name);
    for (const auto& el : cls.elements) {
      for (const auto& entry : el.pool) add(entry);
    }
  }
  for (const auto& [name, pool] : spec.fillers) {
    for (const auto& entry : pool) add(entry);
  }
  for (const auto& ds : spec.datasets) {
    for (const auto& tpl : ds.templates) {
      for (const auto& piece : parse_template(tpl)) {
        if (piece.kind == Piece::Kind::kLiteral) add(piece.value);
      }
    }
  }
  return {words.begin(), words.end()};
}

}  // namespace zsner
