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

#include "zsner/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>

#include "zsner/checkpoint.h"
#include "zsner/error.h"

namespace zsner {
namespace {

namespace fs = std::filesystem;

using Validator = std::function<std::optional<double>(const Model&, int32_t epoch)>;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// Shared epoch loop: per-epoch shuffle from one seeded stream, one dropout
// seed per step drawn from the same stream.
TrainResult run_epochs(Model model, const std::vector<EncodedExample>& train,
                       const std::vector<std::string>& train_classes,
                       const TrainOptions& options, const Validator& validate) {
  if (train.empty()) throw DataError("training set is empty");
  if (options.epochs < 1) throw UsageError("epochs must be at least 1");
  options.optimizer.validate();
  const auto started = std::chrono::steady_clock::now();
  fs::path run_dir;
  if (!options.run_dir.empty()) {
    run_dir = options.run_dir;
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec) throw IoError("cannot create run directory " + run_dir.string());
  }

  TrainResult result;
  result.log.seed = options.seed;
  result.log.strategy = to_string(options.strategy);
  OptimizerState state = OptimizerState::zeros(model.config);
  std::mt19937_64 rng(options.seed);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const size_t bs = static_cast<size_t>(options.optimizer.batch_size);

  for (int32_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int64_t batches = 0;
    for (size_t begin = 0; begin < order.size(); begin += bs) {
      const size_t end = std::min(order.size(), begin + bs);
      std::vector<const EncodedExample*> ptrs;
      for (size_t i = begin; i < end; ++i) {
        if (!options.unseen.empty() && train_classes[order[i]] == options.unseen) {
          throw DataError("unseen class '" + options.unseen +
                          "' reached a training batch");
        }
        ptrs.push_back(&train[order[i]]);
      }
      const Batch batch = Batch::stack(std::span<const EncodedExample* const>(ptrs));
      const auto lg = backward(model, batch, {Mode::kTrain, rng()});
      if (!std::isfinite(lg.loss)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      adam_step(model, lg.gradients, state, options.optimizer);
      loss_sum += lg.loss;
      ++batches;
      ++result.steps;
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(batches);
    record.validation_macro_f1 = validate ? validate(model, epoch) : std::nullopt;
    record.parameter_hash = parameter_hash(model);
    const std::string name = "epoch-" + std::to_string(epoch) + ".ckpt";
    record.checkpoint = name;
    if (!run_dir.empty()) {
      save_checkpoint_file((run_dir / name).string(), model,
                           {{"epoch", epoch}, {"seed", options.seed}});
    }
    result.log.epochs.push_back(record);
    result.epoch_models.push_back(model);
  }
  result.selected_epoch = select_model(result.log);
  result.log.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!run_dir.empty()) {
    write_text(run_dir / "train_log.tsv", result.log.serialize());
    write_text(run_dir / "selected", std::to_string(result.selected_epoch) + "\n");
  }
  return result;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw UsageError("weight decay must be non-negative");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw UsageError("betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) throw UsageError("epsilon must be positive");
  if (batch_size < 1) throw UsageError("batch size must be at least 1");
}

OptimizerState OptimizerState::zeros(const ModelConfig& config) {
  return {Parameters<float>::zeros(config), Parameters<float>::zeros(config), 0};
}

void adam_step(Model& model, const Gradients& gradients, OptimizerState& state,
               const OptimizerConfig& config) {
  auto params = model.params.tensors();
  const auto grads = gradients.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  if (grads.size() != params.size() || m.size() != params.size()) {
    throw UsageError("gradients are not congruent with the model");
  }
  for (size_t t = 0; t < params.size(); ++t) {
    if (grads[t].value->rows() != params[t].value->rows() ||
        grads[t].value->cols() != params[t].value->cols()) {
      throw UsageError("gradient shape mismatch for tensor " + params[t].name);
    }
    if (!grads[t].value->allFinite()) {
      throw NumericError("non-finite gradient in tensor " + params[t].name);
    }
  }
  ++state.step;
  const double lr = config.learning_rate;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double shrink = 1.0 - lr * config.weight_decay;
  for (size_t t = 0; t < params.size(); ++t) {
    float* p = params[t].value->data();
    const float* g = grads[t].value->data();
    float* mt = m[t].value->data();
    float* vt = v[t].value->data();
    const bool decay = params[t].decay && config.weight_decay != 0.0;
    for (Eigen::Index i = 0; i < params[t].value->size(); ++i) {
      double theta = p[i];
      if (decay) theta *= shrink;
      const double gi = g[i];
      const double mi = b1 * mt[i] + (1.0 - b1) * gi;
      const double vi = b2 * vt[i] + (1.0 - b2) * gi * gi;
      mt[i] = static_cast<float>(mi);
      vt[i] = static_cast<float>(vi);
      theta -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + config.epsilon);
      p[i] = static_cast<float>(theta);
    }
  }
}

ValidationStrategy parse_validation_strategy(std::string_view text) {
  ValidationStrategy s;
  if (text == "all") {
    s.kind = ValidationKind::kAllClassesWithUnseen;
  } else if (text == "seen") {
    s.kind = ValidationKind::kSeenOnly;
  } else if (text == "unseen") {
    s.kind = ValidationKind::kSingleUnseenOnly;
  } else if (text == "manual") {
    s.kind = ValidationKind::kManual;
  } else if (text.starts_with("few:")) {
    s.kind = ValidationKind::kFewUnseen;
    std::string_view rest = text.substr(4);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      if (!item.empty()) s.classes.push_back(item);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (s.classes.empty()) throw UsageError("few: strategy needs at least one class");
  } else {
    throw UsageError("unknown validation strategy '" + std::string(text) +
                     "' (expected all, seen, unseen, few:A,B or manual)");
  }
  return s;
}

std::string to_string(const ValidationStrategy& s) {
  switch (s.kind) {
    case ValidationKind::kAllClassesWithUnseen:
      return "all";
    case ValidationKind::kSeenOnly:
      return "seen";
    case ValidationKind::kSingleUnseenOnly:
      return "unseen";
    case ValidationKind::kManual:
      return "manual";
    case ValidationKind::kFewUnseen: {
      std::string out = "few:";
      for (size_t i = 0; i < s.classes.size(); ++i) {
        out += (i ? "," : "") + s.classes[i];
      }
      return out;
    }
  }
  return "all";
}

std::vector<PromptExample> build_validation_set(
    const std::vector<PromptExample>& validation, const ValidationStrategy& strategy,
    const std::string& unseen) {
  std::set<std::string> present;
  for (const auto& ex : validation) present.insert(ex.query_class);
  std::function<bool(const PromptExample&)> keep;
  switch (strategy.kind) {
    case ValidationKind::kAllClassesWithUnseen:
    case ValidationKind::kManual:
      keep = [](const PromptExample&) { return true; };
      break;
    case ValidationKind::kSeenOnly:
      keep = [&](const PromptExample& ex) { return ex.query_class != unseen; };
      break;
    case ValidationKind::kSingleUnseenOnly:
      if (!present.contains(unseen)) {
        throw DataError("validation split has no examples of class '" + unseen + "'");
      }
      keep = [&](const PromptExample& ex) { return ex.query_class == unseen; };
      break;
    case ValidationKind::kFewUnseen:
      for (const auto& c : strategy.classes) {
        if (!present.contains(c)) {
          throw DataError("validation split has no examples of class '" + c + "'");
        }
      }
      keep = [&](const PromptExample& ex) {
        return std::find(strategy.classes.begin(), strategy.classes.end(),
                         ex.query_class) != strategy.classes.end();
      };
      break;
  }
  std::vector<PromptExample> out;
  for (const auto& ex : validation) {
    if (keep(ex)) out.push_back(ex);
  }
  if (out.empty()) throw DataError("validation set is empty under strategy " + to_string(strategy));
  return out;
}

std::string TrainLog::serialize() const {
  std::string out;
  auto line = [&](const std::string& epoch, const char* split, const char* metric,
                  const std::string& value) {
    out += epoch + "\t" + split + "\t" + metric + "\t" + value + "\n";
  };
  line("0", "meta", "seed", std::to_string(seed));
  line("0", "meta", "strategy", strategy);
  for (const auto& e : epochs) {
    const std::string n = std::to_string(e.epoch);
    line(n, "train", "loss", format_double(e.train_loss));
    if (e.validation_macro_f1) {
      line(n, "validation", "macro_f1", format_double(*e.validation_macro_f1));
    }
    line(n, "checkpoint", "file", e.checkpoint);
    char hash[24];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(e.parameter_hash));
    line(n, "checkpoint", "hash", hash);
  }
  return out;
}

int32_t select_model(const TrainLog& log) {
  if (log.epochs.empty()) throw UsageError("train log has no epochs");
  int32_t best = 0;
  std::optional<double> best_f1;
  for (const auto& e : log.epochs) {
    if (e.validation_macro_f1 && (!best_f1 || *e.validation_macro_f1 > *best_f1)) {
      best_f1 = e.validation_macro_f1;
      best = e.epoch;
    }
  }
  return best_f1 ? best : log.epochs.back().epoch;
}

TrainResult train_zero_shot(const std::vector<PromptExample>& train,
                            const std::vector<PromptExample>& validation,
                            const Vocab& vocab, const TrainOptions& options,
                            const Model* initial) {
  std::vector<EncodedExample> encoded;
  std::vector<std::string> classes;
  encoded.reserve(train.size());
  for (const auto& ex : train) {
    if (!options.unseen.empty() && ex.query_class == options.unseen) {
      throw DataError("training set contains the unseen class '" + options.unseen +
                      "' (" + ex.origin.doc_id + "#" +
                      std::to_string(ex.origin.sent_index) + ")");
    }
    encoded.push_back(encode(ex, vocab, options.encode));
    classes.push_back(ex.query_class);
  }
  Model model;
  if (initial != nullptr) {
    model = *initial;
  } else {
    ModelConfig config = options.model;
    config.vocab_size = vocab.size();
    config.num_labels = 2;
    model = init_model(config);
  }
  if (model.config.vocab_size != vocab.size()) {
    throw DataError("model vocabulary size " + std::to_string(model.config.vocab_size) +
                    " differs from vocabulary of " + std::to_string(vocab.size()));
  }
  PredictOptions predict_options;
  predict_options.encode = options.encode;
  predict_options.threads = options.threads;
  Validator validate;
  if (!validation.empty()) {
    const bool manual = options.strategy.kind == ValidationKind::kManual;
    validate = [&, manual](const Model& m, int32_t epoch) -> std::optional<double> {
      const auto records = predict(m, validation, vocab, predict_options);
      if (manual) {
        if (!options.run_dir.empty()) {
          const auto path = fs::path(options.run_dir) /
                            ("validation-epoch-" + std::to_string(epoch) + ".jsonl");
          std::ofstream out(path, std::ios::binary);
          if (!out) throw IoError("cannot open " + path.string() + " for writing");
          write_predictions(records, out);
        }
        return std::nullopt;
      }
      return macro_f1(records);
    };
  }
  return run_epochs(std::move(model), encoded, classes, options, validate);
}

FineTuneResult fine_tune_few_shot(const Model& start,
                                  const std::vector<PromptExample>& shots,
                                  const Vocab& vocab, const FineTuneOptions& options) {
  if (shots.empty()) throw DataError("few-shot set is empty");
  for (const auto& s : shots) {
    if (s.query_class != shots.front().query_class) {
      throw DataError("few-shot examples mix classes '" + shots.front().query_class +
                      "' and '" + s.query_class + "'");
    }
  }
  if (options.epochs < 1) throw UsageError("epochs must be at least 1");
  options.optimizer.validate();
  std::vector<EncodedExample> encoded;
  for (const auto& s : shots) encoded.push_back(encode(s, vocab, options.encode));

  FineTuneResult result{start, 0, 0.0};
  OptimizerState state = OptimizerState::zeros(start.config);
  std::mt19937_64 rng(options.seed);
  std::vector<size_t> order(encoded.size());
  std::iota(order.begin(), order.end(), 0);
  const size_t bs = static_cast<size_t>(options.optimizer.batch_size);
  for (int32_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t begin = 0; begin < order.size(); begin += bs) {
      std::vector<const EncodedExample*> ptrs;
      for (size_t i = begin; i < std::min(order.size(), begin + bs); ++i) {
        ptrs.push_back(&encoded[order[i]]);
      }
      const Batch batch = Batch::stack(std::span<const EncodedExample* const>(ptrs));
      const auto lg = backward(result.model, batch, {Mode::kTrain, rng()});
      if (!std::isfinite(lg.loss)) throw NumericError("non-finite fine-tuning loss");
      adam_step(result.model, lg.gradients, state, options.optimizer);
      result.final_loss = lg.loss;
      ++result.steps;
    }
  }
  return result;
}

TrainResult train_multiclass_pilot(const MultiClassDataset& train,
                                   const MultiClassDataset& validation,
                                   const Vocab& vocab, const TrainOptions& options) {
  std::vector<EncodedExample> encoded;
  for (const auto& ex : train.examples) {
    for (int32_t label : ex.word_labels) {
      if (label < 0 || label >= train.classes.size()) {
        throw DataError("label id " + std::to_string(label) + " outside the class vocabulary");
      }
    }
    encoded.push_back(encode_multiclass(ex, vocab, options.encode));
  }
  ModelConfig config = options.model;
  config.vocab_size = vocab.size();
  config.num_labels = train.classes.size();
  TrainOptions opts = options;
  opts.unseen.clear();
  PredictOptions predict_options;
  predict_options.encode = options.encode;
  predict_options.threads = options.threads;
  Validator validate;
  if (!validation.examples.empty()) {
    validate = [&](const Model& m, int32_t) -> std::optional<double> {
      const auto records = predict_multiclass(m, validation, vocab, predict_options);
      return macro_f1(records);
    };
  }
  const std::vector<std::string> classes(encoded.size());
  return run_epochs(init_model(config), encoded, classes, opts, validate);
}

}  // namespace zsner
