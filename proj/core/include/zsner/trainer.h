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

#ifndef ZSNER_TRAINER_H_
#define ZSNER_TRAINER_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zsner/encoder.h"
#include "zsner/evaluator.h"
#include "zsner/prompt.h"
#include "zsner/subword.h"

namespace zsner {

struct OptimizerConfig {
  double learning_rate = 5e-5;
  double weight_decay = 0.01;  // decoupled
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int32_t batch_size = 32;

  void validate() const;
};

struct OptimizerState {
  Parameters<float> m;
  Parameters<float> v;
  int64_t step = 0;

  static OptimizerState zeros(const ModelConfig& config);
};

// Bias-corrected Adam with decay θ ← θ − lr·wd·θ on weight matrices and
// embeddings only. Throws NumericError naming the first non-finite tensor.
void adam_step(Model& model, const Gradients& gradients, OptimizerState& state,
               const OptimizerConfig& config);

enum class ValidationKind {
  kAllClassesWithUnseen,
  kSeenOnly,
  kSingleUnseenOnly,
  kFewUnseen,
  kManual,  // predictions are exported, no metric is computed
};

struct ValidationStrategy {
  ValidationKind kind = ValidationKind::kAllClassesWithUnseen;
  std::vector<std::string> classes;  // kFewUnseen only
};

// "all", "seen", "unseen", "few:A,B", "manual".
ValidationStrategy parse_validation_strategy(std::string_view text);
std::string to_string(const ValidationStrategy& strategy);

std::vector<PromptExample> build_validation_set(
    const std::vector<PromptExample>& validation, const ValidationStrategy& strategy,
    const std::string& unseen);

struct EpochRecord {
  int32_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> validation_macro_f1;
  std::string checkpoint;
  uint64_t parameter_hash = 0;
};

struct TrainLog {
  uint64_t seed = 0;
  std::string strategy;
  std::vector<EpochRecord> epochs;
  double wall_clock_seconds = 0.0;  // not part of the serialized log

  // "epoch\tsplit\tmetric\tvalue" lines.
  std::string serialize() const;
};

// Best validation macro-F1, earliest on ties; last epoch when nothing was
// measured. Returns a 1-based epoch.
int32_t select_model(const TrainLog& log);

struct TrainOptions {
  ModelConfig model;
  OptimizerConfig optimizer;
  EncodeOptions encode;
  int32_t epochs = 5;
  uint64_t seed = 0;
  ValidationStrategy strategy;
  std::string unseen;
  // When set: epoch-N.ckpt, train_log.tsv, selected and, in manual mode,
  // validation-epoch-N.jsonl are written here.
  std::string run_dir;
  int32_t threads = 1;
};

struct TrainResult {
  TrainLog log;
  std::vector<Model> epoch_models;  // index e-1 holds epoch e
  int32_t selected_epoch = 0;
  int64_t steps = 0;

  const Model& selected() const { return epoch_models.at(selected_epoch - 1); }
};

// `initial` continues an existing model; otherwise one is initialized from
// options.model with the vocabulary size filled in.
TrainResult train_zero_shot(const std::vector<PromptExample>& train,
                            const std::vector<PromptExample>& validation,
                            const Vocab& vocab, const TrainOptions& options,
                            const Model* initial = nullptr);

struct FineTuneOptions {
  OptimizerConfig optimizer;
  EncodeOptions encode;
  int32_t epochs = 10;
  uint64_t seed = 0;
};

struct FineTuneResult {
  Model model;
  int64_t steps = 0;
  double final_loss = 0.0;
};

FineTuneResult fine_tune_few_shot(const Model& start,
                                  const std::vector<PromptExample>& shots,
                                  const Vocab& vocab, const FineTuneOptions& options);

// Same loop with a (C+1)-way head; validation uses per-class macro-F1.
TrainResult train_multiclass_pilot(const MultiClassDataset& train,
                                   const MultiClassDataset& validation,
                                   const Vocab& vocab, const TrainOptions& options);

}  // namespace zsner

#endif  // ZSNER_TRAINER_H_
