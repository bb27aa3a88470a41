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

#include "zsner/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "zsner/error.h"

namespace zsner {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void put_u32(std::string& out, uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(size_t n, const char* what) {
    if (n > bytes_.size() - pos_) {
      throw DataError(std::string("truncated checkpoint while reading ") + what);
    }
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  uint32_t u32(const char* what) {
    uint32_t v;
    std::memcpy(&v, take(4, what).data(), 4);
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

}  // namespace

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"hidden_dim", c.hidden_dim},
          {"num_layers", c.num_layers}, {"num_heads", c.num_heads},
          {"ffn_dim", c.ffn_dim},       {"max_seq_len", c.max_seq_len},
          {"num_labels", c.num_labels}, {"dropout_rate", c.dropout_rate},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& json) {
  if (!json.is_object()) throw DataError("model config must be a JSON object");
  ModelConfig c;
  try {
    for (const auto& [key, value] : json.items()) {
      if (key == "vocab_size") c.vocab_size = value.get<int32_t>();
      else if (key == "hidden_dim") c.hidden_dim = value.get<int32_t>();
      else if (key == "num_layers") c.num_layers = value.get<int32_t>();
      else if (key == "num_heads") c.num_heads = value.get<int32_t>();
      else if (key == "ffn_dim") c.ffn_dim = value.get<int32_t>();
      else if (key == "max_seq_len") c.max_seq_len = value.get<int32_t>();
      else if (key == "num_labels") c.num_labels = value.get<int32_t>();
      else if (key == "dropout_rate") c.dropout_rate = value.get<double>();
      else if (key == "seed") c.seed = value.get<uint64_t>();
      else throw DataError("unknown model config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model config value: ") + e.what());
  }
  return c;
}

std::string save_checkpoint(const Model& model, const nlohmann::json& metadata) {
  model.config.validate();
  std::string out(kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  const nlohmann::json header = {{"config", config_to_json(model.config)},
                                 {"metadata", metadata}};
  const std::string text = header.dump();
  put_u32(out, static_cast<uint32_t>(text.size()));
  out += text;
  const auto tensors = model.params.tensors();
  put_u32(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, static_cast<uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<uint32_t>(t.rank));
    if (t.rank == 2) put_u32(out, static_cast<uint32_t>(t.value->rows()));
    put_u32(out, static_cast<uint32_t>(t.value->cols()));
    out.append(reinterpret_cast<const char*>(t.value->data()),
               sizeof(float) * t.value->size());
  }
  return out;
}

Checkpoint load_checkpoint(std::string_view bytes, const ModelConfig* expected) {
  Reader r(bytes);
  if (r.take(kCheckpointMagic.size(), "magic") != kCheckpointMagic) {
    throw DataError("not a checkpoint: bad magic bytes");
  }
  const uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) +
                    " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const uint32_t header_len = r.u32("header length");
  const auto header_text = r.take(header_len, "header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }
  if (!header.is_object() || !header.contains("config")) {
    throw DataError("corrupt checkpoint header: missing config");
  }
  Checkpoint ckpt;
  ckpt.model.config = config_from_json(header["config"]);
  ckpt.model.config.validate();
  ckpt.metadata = header.value("metadata", nlohmann::json::object());
  const ModelConfig& shape_config = expected != nullptr ? *expected : ckpt.model.config;
  ckpt.model.params = Parameters<float>::zeros(shape_config);
  auto tensors = ckpt.model.params.tensors();
  const uint32_t count = r.u32("tensor count");
  if (count != tensors.size()) {
    throw DataError("checkpoint holds " + std::to_string(count) +
                    " tensors, expected " + std::to_string(tensors.size()));
  }
  for (auto& t : tensors) {
    const uint32_t name_len = r.u32("tensor name length");
    const auto name = r.take(name_len, "tensor name");
    if (name != t.name) {
      throw DataError("checkpoint tensor '" + std::string(name) +
                      "' where '" + t.name + "' was expected");
    }
    const uint32_t rank = r.u32("tensor rank");
    if (rank != static_cast<uint32_t>(t.rank)) {
      throw DataError("shape mismatch for tensor " + t.name + ": rank " +
                      std::to_string(rank));
    }
    const uint32_t rows = rank == 2 ? r.u32("tensor dims") : 1;
    const uint32_t cols = r.u32("tensor dims");
    if (rows != t.value->rows() || cols != t.value->cols()) {
      throw DataError("shape mismatch for tensor " + t.name + ": checkpoint [" +
                      std::to_string(rows) + "," + std::to_string(cols) +
                      "], expected [" + std::to_string(t.value->rows()) + "," +
                      std::to_string(t.value->cols()) + "]");
    }
    const auto data = r.take(sizeof(float) * t.value->size(), "tensor data");
    std::memcpy(t.value->data(), data.data(), data.size());
  }
  if (!r.done()) throw DataError("trailing bytes after checkpoint tensors");
  if (expected != nullptr) ckpt.model.config = *expected;
  return ckpt;
}

void save_checkpoint_file(const std::string& path, const Model& model,
                          const nlohmann::json& metadata) {
  const std::string bytes = save_checkpoint(model, metadata);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint_file(const std::string& path, const ModelConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_checkpoint(buf.str(), expected);
}

uint64_t parameter_hash(const Model& model) {
  uint64_t h = 1469598103934665603ULL;
  for (const auto& t : model.params.tensors()) {
    const auto* p = reinterpret_cast<const unsigned char*>(t.value->data());
    for (size_t i = 0; i < sizeof(float) * t.value->size(); ++i) {
      h = (h ^ p[i]) * 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace zsner
