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

#include "run_config.h"

#include <fstream>
#include <sstream>

#include "zsner/checkpoint.h"
#include "zsner/error.h"

namespace zsner::tools {
namespace {

using nlohmann::json;

std::string_view propagation_name(LabelPropagation p) {
  return p == LabelPropagation::kAllSubtokens ? "all" : "first";
}

LabelPropagation parse_propagation(const std::string& text) {
  if (text == "all") return LabelPropagation::kAllSubtokens;
  if (text == "first") return LabelPropagation::kFirstSubtoken;
  throw UsageError("propagation must be 'all' or 'first', got '" + text + "'");
}

json optimizer_json(const OptimizerConfig& o) {
  return {{"learning_rate", o.learning_rate}, {"weight_decay", o.weight_decay},
          {"beta1", o.beta1},                 {"beta2", o.beta2},
          {"epsilon", o.epsilon},             {"batch_size", o.batch_size}};
}

OptimizerConfig optimizer_from_json(const json& j) {
  OptimizerConfig o;
  for (const auto& [key, value] : j.items()) {
    if (key == "learning_rate") o.learning_rate = value.get<double>();
    else if (key == "weight_decay") o.weight_decay = value.get<double>();
    else if (key == "beta1") o.beta1 = value.get<double>();
    else if (key == "beta2") o.beta2 = value.get<double>();
    else if (key == "epsilon") o.epsilon = value.get<double>();
    else if (key == "batch_size") o.batch_size = value.get<int32_t>();
    else throw UsageError("unknown optimizer key '" + key + "'");
  }
  return o;
}

}  // namespace

json RunConfig::to_json() const {
  json model_json = config_to_json(model);
  return {{"corpus", corpus},
          {"vocab", vocab},
          {"run_dir", run_dir},
          {"variant", std::string(to_string(variant))},
          {"split", {{"train", split.train}, {"validation", split.validation}, {"test", split.test}}},
          {"unseen", unseen},
          {"ks", ks},
          {"model", model_json},
          {"optimizer", optimizer_json(optimizer)},
          {"validation", validation},
          {"epochs", epochs},
          {"finetune_epochs", finetune_epochs},
          {"finetune_lr", finetune_lr ? json(*finetune_lr) : json(nullptr)},
          {"pilot_epochs", pilot_epochs},
          {"max_len", max_len},
          {"propagation", std::string(propagation_name(propagation))},
          {"label_segment_in_loss", label_segment_in_loss},
          {"vocab_size", vocab_size},
          {"sentences", sentences},
          {"format", format},
          {"seed", seed},
          {"threads", threads}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "corpus") c.corpus = value.get<std::string>();
      else if (key == "vocab") c.vocab = value.get<std::string>();
      else if (key == "run_dir") c.run_dir = value.get<std::string>();
      else if (key == "variant") c.variant = parse_label_variant(value.get<std::string>());
      else if (key == "split") {
        c.split.train = value.value("train", c.split.train);
        c.split.validation = value.value("validation", c.split.validation);
        c.split.test = value.value("test", c.split.test);
      } else if (key == "unseen") c.unseen = value.get<std::string>();
      else if (key == "ks") c.ks = value.get<std::vector<int32_t>>();
      else if (key == "model") c.model = config_from_json(value);
      else if (key == "optimizer") c.optimizer = optimizer_from_json(value);
      else if (key == "validation") c.validation = value.get<std::string>();
      else if (key == "epochs") c.epochs = value.get<int32_t>();
      else if (key == "finetune_epochs") c.finetune_epochs = value.get<int32_t>();
      else if (key == "finetune_lr") {
        if (value.is_null()) c.finetune_lr.reset();
        else c.finetune_lr = value.get<double>();
      }
      else if (key == "pilot_epochs") c.pilot_epochs = value.get<int32_t>();
      else if (key == "max_len") c.max_len = value.get<int32_t>();
      else if (key == "propagation") c.propagation = parse_propagation(value.get<std::string>());
      else if (key == "label_segment_in_loss") c.label_segment_in_loss = value.get<bool>();
      else if (key == "vocab_size") c.vocab_size = value.get<int32_t>();
      else if (key == "sentences") c.sentences = value.get<int32_t>();
      else if (key == "format") c.format = value.get<std::string>();
      else if (key == "seed") c.seed = value.get<uint64_t>();
      else if (key == "threads") c.threads = value.get<int32_t>();
      else throw UsageError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << to_json().dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

EncodeOptions RunConfig::encode_options() const {
  EncodeOptions e;
  e.max_len = max_len;
  e.propagation = propagation;
  e.label_segment_in_loss = label_segment_in_loss;
  return e;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m = model;
  m.max_seq_len = max_len;
  m.seed = seed;
  return m;
}

std::vector<int32_t> parse_ks(const std::string& text) {
  std::vector<int32_t> ks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      ks.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("--ks expects comma-separated non-negative integers, got '" + text + "'");
    }
  }
  if (ks.empty()) throw UsageError("--ks is empty");
  return ks;
}

}  // namespace zsner::tools
