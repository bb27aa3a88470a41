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

#ifndef ZSNER_ENCODER_H_
#define ZSNER_ENCODER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "zsner/subword.h"

namespace zsner {

struct ModelConfig {
  int32_t vocab_size = 0;
  int32_t hidden_dim = 64;
  int32_t num_layers = 2;
  int32_t num_heads = 2;
  int32_t ffn_dim = 256;
  int32_t max_seq_len = 128;
  int32_t num_labels = 2;
  double dropout_rate = 0.1;
  uint64_t seed = 0;

  // Throws UsageError when hidden_dim is not divisible by num_heads,
  // num_labels < 2, or any size is non-positive.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

// Closed-form parameter count for a configuration.
int64_t parameter_count(const ModelConfig& config);

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A parameter tensor by canonical name. Rank-1 tensors are stored as a
// single-row matrix. `decay` marks tensors subject to weight decay.
template <typename M>
struct NamedTensor {
  std::string name;
  M* value;
  int rank;
  bool decay;
};

template <typename T>
struct LayerParameters {
  Matrix<T> query_w, query_b;
  Matrix<T> key_w;  // no key bias: attention softmax is invariant to it
  Matrix<T> value_w, value_b;
  Matrix<T> output_w, output_b;
  Matrix<T> attention_ln_gamma, attention_ln_beta;
  Matrix<T> ffn_in_w, ffn_in_b;
  Matrix<T> ffn_out_w, ffn_out_b;
  Matrix<T> ffn_ln_gamma, ffn_ln_beta;
};

template <typename T>
struct Parameters {
  Matrix<T> token_embedding;
  Matrix<T> position_embedding;
  Matrix<T> segment_embedding;
  Matrix<T> embedding_ln_gamma, embedding_ln_beta;
  std::vector<LayerParameters<T>> layers;
  Matrix<T> head_w, head_b;

  // Canonical order; checkpoints, optimizers and gradient checks rely on it.
  std::vector<NamedTensor<Matrix<T>>> tensors();
  std::vector<NamedTensor<const Matrix<T>>> tensors() const;

  static Parameters zeros(const ModelConfig& config);
};

template <typename T>
int64_t count_parameters(const Parameters<T>& params) {
  int64_t n = 0;
  for (const auto& t : params.tensors()) n += t.value->size();
  return n;
}

template <typename T>
struct BasicModel {
  ModelConfig config;
  Parameters<T> params;
};

using Model = BasicModel<float>;
using Gradients = Parameters<float>;

// Token, position, segment embeddings and weight matrices ~ N(0, 0.02^2);
// layer-norm scales 1, biases 0. Deterministic for a fixed config.seed.
Model init_model(const ModelConfig& config);

template <typename To, typename From>
BasicModel<To> cast_model(const BasicModel<From>& model) {
  BasicModel<To> out;
  out.config = model.config;
  out.params = Parameters<To>::zeros(model.config);
  auto dst = out.params.tensors();
  const auto src = model.params.tensors();
  for (size_t i = 0; i < dst.size(); ++i) {
    *dst[i].value = src[i].value->template cast<To>();
  }
  return out;
}

// Row-major [size x length] stack of encoded examples.
struct Batch {
  int32_t size = 0;
  int32_t length = 0;
  std::vector<int32_t> input_ids;
  std::vector<int32_t> segment_ids;
  std::vector<int32_t> attention_mask;
  std::vector<int32_t> labels;
  std::vector<int32_t> loss_mask;

  // With `trim_padding`, the length is cut to the longest attended prefix
  // in the batch; padding positions never affect attended outputs, so this
  // only saves work.
  static Batch stack(std::span<const EncodedExample* const> examples,
                     bool trim_padding = true);
  static Batch stack(std::span<const EncodedExample> examples,
                     bool trim_padding = true);

  int32_t at(int32_t b, int32_t t) const { return b * length + t; }
};

// Random ids, segments, labels and right-padded attention for tests, benchmarks
// and the gradient-check command. Every example attends at least 2 positions.
Batch random_batch(const ModelConfig& config, int32_t size, int32_t length,
                   uint64_t seed);

enum class Mode { kEval, kTrain };

struct ForwardOptions {
  Mode mode = Mode::kEval;
  // Seeds the dropout masks in train mode.
  uint64_t dropout_seed = 0;
};

// Per-position label probabilities, shape [size * length, num_labels].
template <typename T>
Matrix<T> forward(const BasicModel<T>& model, const Batch& batch,
                  const ForwardOptions& options = {});

// Mean negative log-likelihood of the gold labels over loss_mask positions.
// Throws DataError when no position is unmasked.
template <typename T>
double loss(const Matrix<T>& probabilities, const Batch& batch);

template <typename T>
struct LossAndGradients {
  double loss = 0.0;
  Parameters<T> gradients;
};

// Exact reverse-mode gradients of the mean token cross-entropy.
template <typename T>
LossAndGradients<T> backward(const BasicModel<T>& model, const Batch& batch,
                             const ForwardOptions& options = {});

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  int64_t worst_index = -1;
  int64_t coordinates_checked = 0;
};

// Central differences against backward() in eval mode, on up to
// `samples_per_tensor` random coordinates per tensor (all of a smaller
// tensor). Relative error uses |analytic| + |numeric| + 1e-12.
GradientCheckResult gradient_check(const BasicModel<double>& model,
                                   const Batch& batch, double epsilon,
                                   int32_t samples_per_tensor = 200,
                                   uint64_t seed = 0);
// Promotes the model to double precision before checking.
GradientCheckResult gradient_check(const Model& model, const Batch& batch,
                                   double epsilon,
                                   int32_t samples_per_tensor = 200,
                                   uint64_t seed = 0);

// Argmax label per position, flattened like the batch.
template <typename T>
std::vector<int32_t> argmax_labels(const Matrix<T>& probabilities);

}  // namespace zsner

#endif  // ZSNER_ENCODER_H_
