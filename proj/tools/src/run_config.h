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

#ifndef ZSNER_TOOLS_RUN_CONFIG_H_
#define ZSNER_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsner/encoder.h"
#include "zsner/evaluator.h"
#include "zsner/prompt.h"
#include "zsner/subword.h"
#include "zsner/trainer.h"

namespace zsner::tools {

// Everything a subcommand needs to replay a run. Serialized as JSON into
// the run directory.
struct RunConfig {
  std::string corpus;
  std::string vocab;
  std::string run_dir = "run";
  LabelVariant variant = LabelVariant::kLabelAsNegative;
  SplitRatios split;
  std::string unseen;
  std::vector<int32_t> ks = {0, 1, 10, 100};
  ModelConfig model;
  OptimizerConfig optimizer;
  std::string validation = "all";
  int32_t epochs = 5;
  int32_t finetune_epochs = 10;
  // Few-shot learning rate; the training rate when unset.
  std::optional<double> finetune_lr;
  int32_t pilot_epochs = 40;
  int32_t max_len = 128;
  LabelPropagation propagation = LabelPropagation::kAllSubtokens;
  bool label_segment_in_loss = true;
  int32_t vocab_size = 2000;
  int32_t sentences = 4000;
  std::string format = "text";
  uint64_t seed = 0;
  int32_t threads = 1;

  nlohmann::json to_json() const;
  // Unknown keys are rejected so that typos do not silently fall back.
  static RunConfig from_json(const nlohmann::json& json);
  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;

  EncodeOptions encode_options() const;
  ModelConfig model_config() const;  // model with the run seed applied
};

std::vector<int32_t> parse_ks(const std::string& text);

}  // namespace zsner::tools

#endif  // ZSNER_TOOLS_RUN_CONFIG_H_
