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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "run_config.h"
#include "zsner/checkpoint.h"
#include "zsner/corpus.h"
#include "zsner/encoder.h"
#include "zsner/error.h"
#include "zsner/evaluator.h"
#include "zsner/prompt.h"
#include "zsner/stats.h"
#include "zsner/subword.h"
#include "zsner/synthetic.h"
#include "zsner/trainer.h"

namespace fs = std::filesystem;

namespace zsner::tools {
namespace {

constexpr double kGradientTolerance = 1e-4;

// Flags that mirror RunConfig keys. Only flags given on the command line
// override the loaded config.
struct Overrides {
  std::string config_path;
  std::optional<std::string> corpus, vocab, run_dir, variant, unseen, ks,
      validation, propagation, format;
  std::optional<double> split_train, split_val, split_test, lr, finetune_lr,
      weight_decay, dropout;
  std::optional<int32_t> hidden, layers, heads, ffn, max_len, batch_size, epochs,
      finetune_epochs, pilot_epochs, vocab_size, sentences, threads;
  std::optional<uint64_t> seed;

  void apply(RunConfig& c) const {
    if (corpus) c.corpus = *corpus;
    if (vocab) c.vocab = *vocab;
    if (run_dir) c.run_dir = *run_dir;
    if (variant) c.variant = parse_label_variant(*variant);
    if (unseen) c.unseen = *unseen;
    if (ks) c.ks = parse_ks(*ks);
    if (validation) c.validation = *validation;
    if (propagation) {
      c = RunConfig::from_json([&] {
        auto j = c.to_json();
        j["propagation"] = *propagation;
        return j;
      }());
    }
    if (format) c.format = *format;
    if (split_train) c.split.train = *split_train;
    if (split_val) c.split.validation = *split_val;
    if (split_test) c.split.test = *split_test;
    if (lr) c.optimizer.learning_rate = *lr;
    if (weight_decay) c.optimizer.weight_decay = *weight_decay;
    if (dropout) c.model.dropout_rate = *dropout;
    if (hidden) c.model.hidden_dim = *hidden;
    if (layers) c.model.num_layers = *layers;
    if (heads) c.model.num_heads = *heads;
    if (ffn) c.model.ffn_dim = *ffn;
    if (max_len) c.max_len = *max_len;
    if (batch_size) c.optimizer.batch_size = *batch_size;
    if (epochs) c.epochs = *epochs;
    if (finetune_epochs) c.finetune_epochs = *finetune_epochs;
    if (finetune_lr) c.finetune_lr = *finetune_lr;
    if (pilot_epochs) c.pilot_epochs = *pilot_epochs;
    if (vocab_size) c.vocab_size = *vocab_size;
    if (sentences) c.sentences = *sentences;
    if (threads) c.threads = *threads;
    if (seed) c.seed = *seed;
  }
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON run config; flags override its keys");
  app->add_option("--run-dir", o.run_dir, "Run directory for artifacts and the config snapshot");
  app->add_option("--seed", o.seed, "Random seed (default 0)");
  app->add_option("--threads", o.threads, "Worker threads for prediction (default 1)");
}

void add_model_flags(CLI::App* app, Overrides& o) {
  app->add_option("--hidden", o.hidden, "Hidden size (default 64)");
  app->add_option("--layers", o.layers, "Encoder layers (default 2)");
  app->add_option("--heads", o.heads, "Attention heads (default 2)");
  app->add_option("--ffn", o.ffn, "Feed-forward size (default 256)");
  app->add_option("--max-len", o.max_len, "Maximum sequence length (default 128)");
  app->add_option("--dropout", o.dropout, "Dropout rate (default 0.1)");
}

void add_training_flags(CLI::App* app, Overrides& o) {
  app->add_option("--lr", o.lr, "Adam learning rate (default 5e-5)");
  app->add_option("--weight-decay", o.weight_decay, "Decoupled weight decay (default 0.01)");
  app->add_option("--batch-size", o.batch_size, "Batch size (default 32)");
  app->add_option("--epochs", o.epochs, "Zero-shot training epochs (default 5)");
  app->add_option("--finetune-epochs", o.finetune_epochs, "Few-shot epochs (default 10)");
  app->add_option("--finetune-lr", o.finetune_lr, "Few-shot learning rate (default: --lr)");
  app->add_option("--propagation", o.propagation,
                  "Subword label propagation for training: all|first (default all)");
}

void add_data_flags(CLI::App* app, Overrides& o) {
  app->add_option("--corpus", o.corpus, "Corpus JSONL");
  app->add_option("--vocab", o.vocab, "WordPiece vocabulary, one token per line");
  app->add_option("--variant", o.variant,
                  "label_negative|label_positive (default label_negative)");
  app->add_option("--split-train", o.split_train, "Train fraction (default 0.85)");
  app->add_option("--split-val", o.split_val, "Validation fraction (default 0.05)");
  app->add_option("--split-test", o.split_test, "Test fraction (default 0.10)");
  app->add_option("--vocab-size", o.vocab_size,
                  "Size of a vocabulary built from the corpus when --vocab is absent");
}

RunConfig resolve(const Overrides& o, bool from_run_dir = false) {
  RunConfig c;
  if (!o.config_path.empty()) {
    c = RunConfig::load(o.config_path);
  } else if (from_run_dir) {
    const fs::path dir = o.run_dir.value_or(c.run_dir);
    if (fs::exists(dir / "config.json")) c = RunConfig::load((dir / "config.json").string());
  }
  o.apply(c);
  return c;
}

fs::path prepare_run_dir(const RunConfig& c) {
  const fs::path dir = c.run_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string());
  return dir;
}

void snapshot(const RunConfig& c, const fs::path& dir, const std::string& name = "config.json") {
  c.save((dir / name).string());
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

std::vector<std::string> corpus_words(const SentenceCorpus& corpus) {
  std::set<std::string> words;
  const WordTokenizer tokenizer;
  auto add = [&](const std::string& text) {
    for (const auto& w : tokenizer.tokenize(text)) {
      std::u32string lower;
      for (char32_t ch : decode_utf8(w.text)) lower.push_back(to_lower(ch));
      words.insert(encode_utf8(lower));
    }
  };
  for (const auto& s : corpus.sentences) {
    add(s.text);
    for (const auto& c : s.class_inventory) add(c);
  }
  return {words.begin(), words.end()};
}

Vocab load_or_build_vocab(RunConfig& c, const SentenceCorpus& corpus, const fs::path& dir) {
  if (!c.vocab.empty()) return load_vocab_file(c.vocab);
  Vocab vocab = build_vocab(corpus_words(corpus), c.vocab_size);
  const fs::path path = dir / "vocab.txt";
  write_file(path, vocab.serialize());
  c.vocab = path.string();
  return vocab;
}

int run_ingest(const Overrides& o, const std::string& input, bool conll,
               const std::string& dataset, const std::string& mapping,
               const std::string& out_path) {
  RunConfig c = resolve(o);
  Corpus corpus;
  if (conll) {
    std::ifstream in(input);
    if (!in) throw IoError("cannot open " + input);
    corpus = read_conll(in, dataset.empty() ? fs::path(input).stem().string() : dataset, input);
  } else {
    corpus = read_corpus_file(input);
  }
  if (!mapping.empty()) corpus = merge_classes(corpus, read_class_mapping(mapping));
  const auto dir = prepare_run_dir(c);
  const std::string out = out_path.empty() ? (dir / "corpus.jsonl").string() : out_path;
  write_corpus_file(corpus, out);
  c.corpus = out;
  snapshot(c, dir);
  std::cerr << "ingested " << corpus.documents.size() << " documents into " << out << '\n';
  return 0;
}

int run_stats(const Overrides& o, const std::string& positional) {
  RunConfig c = resolve(o);
  if (!positional.empty()) c.corpus = positional;
  require(c.corpus, "corpus");
  const auto corpus = split_corpus(read_corpus_file(c.corpus));
  const auto table = format_stats_tsv(compute_stats(corpus, WordTokenizer()));
  const auto dir = prepare_run_dir(c);
  write_file(dir / "stats.tsv", table);
  snapshot(c, dir);
  std::cout << table;
  return 0;
}

int run_transform(const Overrides& o, const std::string& out_path) {
  RunConfig c = resolve(o);
  require(c.corpus, "--corpus");
  const auto corpus = split_corpus(read_corpus_file(c.corpus));
  const auto examples = expand_corpus(corpus, c.variant);
  const auto dir = prepare_run_dir(c);
  const std::string out = out_path.empty() ? (dir / "prompts.jsonl").string() : out_path;
  write_prompt_file(examples, out);
  snapshot(c, dir);
  std::cerr << "wrote " << examples.size() << " prompt examples to " << out << '\n';
  return 0;
}

int run_split(const Overrides& o, const std::string& input) {
  RunConfig c = resolve(o);
  std::vector<PromptExample> examples;
  if (!input.empty()) {
    examples = read_prompt_file(input);
  } else {
    require(c.corpus, "--input or --corpus");
    examples = expand_corpus(split_corpus(read_corpus_file(c.corpus)), c.variant);
  }
  const auto split = split_dataset(examples, c.split, c.seed);
  for (const auto& w : split.warnings) std::cerr << "warning: " << w << '\n';
  const auto dir = prepare_run_dir(c);
  write_prompt_file(split.train, (dir / "train.jsonl").string());
  write_prompt_file(split.validation, (dir / "val.jsonl").string());
  write_prompt_file(split.test, (dir / "test.jsonl").string());
  snapshot(c, dir);
  std::cerr << "train " << split.train.size() << ", validation " << split.validation.size()
            << ", test " << split.test.size() << '\n';
  return 0;
}

int run_synth(const Overrides& o, const std::string& out_path, const std::string& vocab_out,
              bool pilot) {
  RunConfig c = resolve(o);
  const auto spec = pilot ? pilot_synthetic_spec(o.sentences.value_or(96), c.seed)
                          : default_synthetic_spec(c.sentences, c.seed);
  const Corpus corpus = generate_synthetic(spec);
  const auto dir = prepare_run_dir(c);
  const std::string out = out_path.empty() ? (dir / "corpus.jsonl").string() : out_path;
  write_corpus_file(corpus, out);
  c.corpus = out;
  if (!vocab_out.empty()) {
    write_file(vocab_out, build_vocab(synthetic_words(spec), c.vocab_size).serialize());
    c.vocab = vocab_out;
  }
  snapshot(c, dir);
  std::cerr << "generated " << corpus.documents.size() << " documents into " << out << '\n';
  return 0;
}

struct PreparedRun {
  DatasetSplit split;
  ExclusionResult exclusion;
  std::vector<PromptExample> validation;
  Vocab vocab;
};

PreparedRun prepare_zero_shot(RunConfig& c, const fs::path& dir) {
  require(c.corpus, "--corpus");
  require(c.unseen, "--unseen");
  const auto corpus = split_corpus(read_corpus_file(c.corpus));
  PreparedRun p;
  p.vocab = load_or_build_vocab(c, corpus, dir);
  p.split = split_dataset(expand_corpus(corpus, c.variant), c.split, c.seed);
  for (const auto& w : p.split.warnings) std::cerr << "warning: " << w << '\n';
  p.exclusion = exclude_class(p.split.train, c.unseen);
  p.validation = build_validation_set(p.split.validation,
                                      parse_validation_strategy(c.validation), c.unseen);
  return p;
}

int run_train(const Overrides& o) {
  RunConfig c = resolve(o);
  const auto dir = prepare_run_dir(c);
  auto p = prepare_zero_shot(c, dir);
  write_prompt_file(p.exclusion.reduced, (dir / "train.jsonl").string());
  write_prompt_file(p.validation, (dir / "val.jsonl").string());
  write_prompt_file(p.split.test, (dir / "test.jsonl").string());
  write_prompt_file(p.exclusion.held_out, (dir / "pool.jsonl").string());
  snapshot(c, dir);

  TrainOptions t;
  t.model = c.model_config();
  t.optimizer = c.optimizer;
  t.encode = c.encode_options();
  t.epochs = c.epochs;
  t.seed = c.seed;
  t.strategy = parse_validation_strategy(c.validation);
  t.unseen = c.unseen;
  t.run_dir = dir.string();
  t.threads = c.threads;
  const auto result = train_zero_shot(p.exclusion.reduced, p.validation, p.vocab, t);
  std::cout << result.log.serialize();
  std::cerr << "selected epoch " << result.selected_epoch << " after " << result.steps
            << " steps in " << result.log.wall_clock_seconds << " s\n";
  return 0;
}

Checkpoint load_selected(const fs::path& dir) {
  const std::string selected = trim(read_file(dir / "selected"));
  return load_checkpoint_file((dir / ("epoch-" + selected + ".ckpt")).string());
}

int32_t selected_epoch(const fs::path& dir) {
  return std::stoi(trim(read_file(dir / "selected")));
}

FineTuneOptions fine_tune_options(const RunConfig& c) {
  FineTuneOptions f;
  f.optimizer = c.optimizer;
  if (c.finetune_lr) f.optimizer.learning_rate = *c.finetune_lr;
  f.encode = c.encode_options();
  f.epochs = c.finetune_epochs;
  f.seed = c.seed;
  return f;
}

PredictOptions predict_options(const RunConfig& c) {
  PredictOptions p;
  p.encode = c.encode_options();
  p.threads = c.threads;
  return p;
}

int run_finetune(const Overrides& o, int32_t k, const std::string& out_path) {
  RunConfig c = resolve(o, true);
  if (k < 1) throw UsageError("--k must be at least 1");
  const fs::path dir = c.run_dir;
  const auto ckpt = load_selected(dir);
  const auto vocab = load_vocab_file(c.vocab);
  std::vector<PromptExample> pool;
  for (const auto& ex : read_prompt_file((dir / "pool.jsonl").string())) {
    if (ex.query_class == c.unseen) pool.push_back(ex);
  }
  const auto shots = sample_few_shot(pool, k, c.seed);
  const auto tuned = fine_tune_few_shot(ckpt.model, shots, vocab, fine_tune_options(c));
  const std::string out =
      out_path.empty() ? (dir / ("finetune-k" + std::to_string(k) + ".ckpt")).string() : out_path;
  save_checkpoint_file(out, tuned.model, {{"k", k}, {"unseen", c.unseen}, {"steps", tuned.steps}});
  snapshot(c, dir, "config-finetune-k" + std::to_string(k) + ".json");
  std::cout << "k=" << k << " steps=" << tuned.steps << " final_loss=" << tuned.final_loss
            << " checkpoint=" << out << '\n';
  return 0;
}

int run_evaluate(const Overrides& o, const std::vector<std::string>& runs) {
  RunConfig c = resolve(o, true);
  const ReportFormat format = parse_report_format(c.format);
  MetricsReport report;
  report.variant = std::string(to_string(c.variant));
  report.base_config = c.to_json()["model"];
  const std::vector<std::string> dirs = runs.empty() ? std::vector<std::string>{c.run_dir} : runs;
  for (const auto& d : dirs) {
    Overrides per_run = o;
    per_run.run_dir = d;
    per_run.config_path.clear();
    RunConfig rc = resolve(per_run, true);
    const fs::path dir = d;
    const auto ckpt = load_selected(dir);
    ProtocolInputs in;
    in.zero_shot = &ckpt.model;
    in.best_epoch = selected_epoch(dir);
    in.few_shot_pool = read_prompt_file((dir / "pool.jsonl").string());
    in.test = read_prompt_file((dir / "test.jsonl").string());
    in.unseen = rc.unseen;
    in.ks = rc.ks;
    const auto rows = evaluate_protocol(in, load_vocab_file(rc.vocab), fine_tune_options(rc),
                                        predict_options(rc), rc.seed);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  const auto out = prepare_run_dir(c);
  write_file(out / "report.txt", report.render(ReportFormat::kText));
  write_file(out / "report.csv", report.render(ReportFormat::kCsv));
  write_file(out / "report.jsonl", report.render(ReportFormat::kJsonl));
  snapshot(c, out, "config-evaluate.json");
  std::cout << report.render(format);
  return 0;
}

int run_gradcheck(const Overrides& o, double epsilon, int32_t samples, int32_t vocab_size,
                  int32_t batch, int32_t length) {
  RunConfig c = resolve(o);
  ModelConfig m = c.model_config();
  if (!o.hidden && o.config_path.empty()) m.hidden_dim = 16;
  if (!o.ffn && o.config_path.empty()) m.ffn_dim = 4 * m.hidden_dim;
  m.vocab_size = vocab_size;
  m.max_seq_len = std::max(m.max_seq_len, length);
  m.dropout_rate = 0.0;
  const Model model = init_model(m);
  const Batch b = random_batch(m, batch, length, c.seed);
  const auto result = gradient_check(model, b, epsilon, samples, c.seed);
  std::printf("max_relative_error\t%.6e\nworst_tensor\t%s\nworst_index\t%lld\ncoordinates\t%lld\n",
              result.max_relative_error, result.worst_tensor.c_str(),
              static_cast<long long>(result.worst_index),
              static_cast<long long>(result.coordinates_checked));
  if (o.run_dir) {
    const auto dir = prepare_run_dir(c);
    snapshot(c, dir);
  }
  if (!(result.max_relative_error < kGradientTolerance)) {
    throw NumericError("gradient check failed: max relative error " +
                       std::to_string(result.max_relative_error) + " >= 1e-4");
  }
  return 0;
}

int run_pilot(const Overrides& o) {
  RunConfig c = resolve(o);
  SentenceCorpus train_corpus, test_corpus;
  if (!c.corpus.empty()) {
    const auto all = split_corpus(read_corpus_file(c.corpus));
    // Every fifth sentence is held out.
    for (size_t i = 0; i < all.sentences.size(); ++i) {
      (i % 5 == 4 ? test_corpus : train_corpus).sentences.push_back(all.sentences[i]);
    }
  } else {
    const int32_t n = o.sentences.value_or(96);
    train_corpus = split_corpus(generate_synthetic(pilot_synthetic_spec(n, c.seed)));
    test_corpus = split_corpus(generate_synthetic(pilot_synthetic_spec(n, c.seed + 1)));
  }
  const auto dir = prepare_run_dir(c);
  SentenceCorpus both = train_corpus;
  both.sentences.insert(both.sentences.end(), test_corpus.sentences.begin(),
                        test_corpus.sentences.end());
  const Vocab vocab = load_or_build_vocab(c, both, dir);
  snapshot(c, dir);

  TrainOptions t;
  t.model = c.model_config();
  t.optimizer = c.optimizer;
  t.encode = c.encode_options();
  t.epochs = c.pilot_epochs;
  t.seed = c.seed;
  t.threads = c.threads;

  const auto multi_train = to_multiclass_dataset(train_corpus);
  const auto multi_test = to_multiclass_dataset(test_corpus);
  const auto multi = train_multiclass_pilot(multi_train, {}, vocab, t);
  const auto multi_records =
      predict_multiclass(multi.epoch_models.back(), multi_test, vocab, predict_options(c));

  const auto binary_train = expand_corpus(train_corpus, c.variant);
  const auto binary_test = expand_corpus(test_corpus, c.variant);
  const auto binary = train_zero_shot(binary_train, {}, vocab, t);
  const auto binary_records =
      predict(binary.epoch_models.back(), binary_test, vocab, predict_options(c));

  std::ostringstream out;
  out << "model\tclass\tf1\tprecision\trecall\n";
  auto emit = [&](const char* model, const std::vector<PredictionRecord>& records) {
    std::set<std::string> classes;
    for (const auto& r : records) classes.insert(r.query_class);
    for (const auto& cls : classes) {
      std::vector<PredictionRecord> subset;
      for (const auto& r : records) {
        if (r.query_class == cls) subset.push_back(r);
      }
      const auto prf = token_prf(subset);
      char line[256];
      std::snprintf(line, sizeof(line), "%s\t%s\t%.4f\t%.4f\t%.4f\n", model, cls.c_str(),
                    prf.f1, prf.precision, prf.recall);
      out << line;
    }
    char line[128];
    std::snprintf(line, sizeof(line), "%s\tmacro\t%.4f\t\t\n", model, macro_f1(records));
    out << line;
  };
  emit("multiclass", multi_records);
  emit("binary", binary_records);
  write_file(dir / "pilot.tsv", out.str());
  std::cout << out.str();
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Zero-shot and few-shot biomedical NER via prompt factorization"};
  app.require_subcommand(1);
  Overrides o;

  auto* ingest = app.add_subcommand("ingest", "Validate and normalize a corpus (JSONL or CoNLL)");
  std::string input, dataset, mapping, out_path, vocab_out;
  bool conll = false;
  ingest->add_option("--input", input, "Input corpus file")->required();
  ingest->add_flag("--conll", conll, "Input is CoNLL (word tag per line)");
  ingest->add_option("--dataset", dataset, "Dataset name for CoNLL input");
  ingest->add_option("--mapping", mapping, "JSON object mapping class names to merged names");
  ingest->add_option("--out", out_path, "Output corpus JSONL (default <run-dir>/corpus.jsonl)");
  add_common(ingest, o);

  auto* stats = app.add_subcommand("stats", "Per-class sentence and token statistics (TSV)");
  std::string stats_corpus;
  stats->add_option("path", stats_corpus, "Corpus JSONL (same as --corpus)");
  add_common(stats, o);
  add_data_flags(stats, o);

  auto* transform = app.add_subcommand("transform", "Expand a corpus into prompt examples");
  transform->add_option("--out", out_path, "Output JSONL (default <run-dir>/prompts.jsonl)");
  add_common(transform, o);
  add_data_flags(transform, o);

  auto* split = app.add_subcommand("split", "Stratified train/validation/test split");
  std::string split_input;
  split->add_option("--input", split_input, "Prompt examples JSONL (else expand --corpus)");
  add_common(split, o);
  add_data_flags(split, o);

  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus");
  bool pilot_corpus = false;
  synth->add_option("--out", out_path, "Output corpus JSONL (default <run-dir>/corpus.jsonl)");
  synth->add_option("--vocab-out", vocab_out, "Also write a vocabulary built from its words");
  synth->add_option("--sentences", o.sentences, "Sentence count (default 4000)");
  synth->add_flag("--pilot", pilot_corpus, "Generate the 3-class pilot corpus instead");
  add_common(synth, o);
  add_data_flags(synth, o);

  auto* train = app.add_subcommand("train", "Zero-shot training with one class held out");
  train->add_option("--unseen", o.unseen, "Class excluded from training");
  train->add_option("--validation", o.validation,
                    "Validation strategy: all|seen|unseen|few:A,B|manual (default all)");
  add_common(train, o);
  add_data_flags(train, o);
  add_model_flags(train, o);
  add_training_flags(train, o);

  auto* finetune = app.add_subcommand("finetune", "Few-shot fine-tuning of the selected checkpoint");
  int32_t k = 0;
  finetune->add_option("--k", k, "Number of shots")->required();
  finetune->add_option("--out", out_path, "Output checkpoint");
  add_common(finetune, o);
  add_training_flags(finetune, o);

  auto* evaluate = app.add_subcommand("evaluate", "Run the k-shot protocol and write reports");
  std::vector<std::string> runs;
  evaluate->add_option("runs", runs, "Train run directories to combine (default --run-dir)");
  evaluate->add_option("--ks", o.ks, "Comma-separated shot counts (default 0,1,10,100)");
  evaluate->add_option("--format", o.format, "text|csv|jsonl (default text)");
  add_common(evaluate, o);
  add_training_flags(evaluate, o);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  double epsilon = 1e-3;
  int32_t samples = 200, gc_vocab = 50, gc_batch = 3, gc_length = 12;
  gradcheck->add_option("--epsilon", epsilon, "Central-difference step (default 1e-3)");
  gradcheck->add_option("--samples", samples, "Coordinates per tensor (default 200)");
  gradcheck->add_option("--gc-vocab", gc_vocab, "Vocabulary size of the probe model (default 50)");
  gradcheck->add_option("--gc-batch", gc_batch, "Probe batch size (default 3)");
  gradcheck->add_option("--gc-length", gc_length, "Probe sequence length (default 12)");
  add_common(gradcheck, o);
  add_model_flags(gradcheck, o);

  auto* pilot = app.add_subcommand("pilot", "Multi-class head versus binary factorization");
  pilot->add_option("--pilot-epochs", o.pilot_epochs, "Epochs for both models (default 40)");
  pilot->add_option("--sentences", o.sentences, "Synthetic pilot sentences (default 96)");
  add_common(pilot, o);
  add_data_flags(pilot, o);
  add_model_flags(pilot, o);
  add_training_flags(pilot, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::kUsage);
  }

  if (*ingest) return run_ingest(o, input, conll, dataset, mapping, out_path);
  if (*stats) return run_stats(o, stats_corpus);
  if (*transform) return run_transform(o, out_path);
  if (*split) return run_split(o, split_input);
  if (*synth) return run_synth(o, out_path, vocab_out, pilot_corpus);
  if (*train) return run_train(o);
  if (*finetune) return run_finetune(o, k, out_path);
  if (*evaluate) return run_evaluate(o, runs);
  if (*gradcheck) return run_gradcheck(o, epsilon, samples, gc_vocab, gc_batch, gc_length);
  if (*pilot) return run_pilot(o);
  return static_cast<int>(ErrorKind::kUsage);
}

}  // namespace
}  // namespace zsner::tools

int main(int argc, char** argv) {
  try {
    return zsner::tools::run(argc, argv);
  } catch (const zsner::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(zsner::ErrorKind::kIo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(zsner::ErrorKind::kData);
  }
}
