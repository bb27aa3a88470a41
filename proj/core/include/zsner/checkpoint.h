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

#ifndef ZSNER_CHECKPOINT_H_
#define ZSNER_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "zsner/encoder.h"

namespace zsner {

inline constexpr std::string_view kCheckpointMagic = "ZSNERCKP";
inline constexpr uint32_t kCheckpointVersion = 1;

nlohmann::json config_to_json(const ModelConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig config_from_json(const nlohmann::json& json);

struct Checkpoint {
  Model model;
  nlohmann::json metadata = nlohmann::json::object();
};

// Layout (all integers little-endian u32):
//   magic "ZSNERCKP", version,
//   header length, header bytes (UTF-8 JSON {"config", "metadata"}),
//   tensor count, then per tensor: name length, name, rank, dims, float32 data.
std::string save_checkpoint(const Model& model,
                            const nlohmann::json& metadata = nlohmann::json::object());

// With `expected`, every tensor shape is checked against it and a mismatch
// names the offending tensor.
Checkpoint load_checkpoint(std::string_view bytes,
                           const ModelConfig* expected = nullptr);

void save_checkpoint_file(const std::string& path, const Model& model,
                          const nlohmann::json& metadata = nlohmann::json::object());
Checkpoint load_checkpoint_file(const std::string& path,
                                const ModelConfig* expected = nullptr);

// FNV-1a over the serialized parameters; cheap fingerprint for logs/tests.
uint64_t parameter_hash(const Model& model);

}  // namespace zsner

#endif  // ZSNER_CHECKPOINT_H_
