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

#include "zsner/encoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "zsner/error.h"

namespace zsner {
namespace {

constexpr double kLayerNormEps = 1e-12;
constexpr double kInitStd = 0.02;

template <typename M, typename P>
std::vector<NamedTensor<M>> collect(P& p) {
  std::vector<NamedTensor<M>> out;
  auto add = [&](std::string name, M& value, int rank, bool decay) {
    out.push_back({std::move(name), &value, rank, decay});
  };
  add("embeddings.token", p.token_embedding, 2, true);
  add("embeddings.position", p.position_embedding, 2, true);
  add("embeddings.segment", p.segment_embedding, 2, true);
  add("embeddings.ln.gamma", p.embedding_ln_gamma, 1, false);
  add("embeddings.ln.beta", p.embedding_ln_beta, 1, false);
  for (size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    const std::string prefix = "layer." + std::to_string(l) + ".";
    add(prefix + "attention.query.weight", layer.query_w, 2, true);
    add(prefix + "attention.query.bias", layer.query_b, 1, false);
    add(prefix + "attention.key.weight", layer.key_w, 2, true);
    add(prefix + "attention.value.weight", layer.value_w, 2, true);
    add(prefix + "attention.value.bias", layer.value_b, 1, false);
    add(prefix + "attention.output.weight", layer.output_w, 2, true);
    add(prefix + "attention.output.bias", layer.output_b, 1, false);
    add(prefix + "attention.ln.gamma", layer.attention_ln_gamma, 1, false);
    add(prefix + "attention.ln.beta", layer.attention_ln_beta, 1, false);
    add(prefix + "ffn.in.weight", layer.ffn_in_w, 2, true);
    add(prefix + "ffn.in.bias", layer.ffn_in_b, 1, false);
    add(prefix + "ffn.out.weight", layer.ffn_out_w, 2, true);
    add(prefix + "ffn.out.bias", layer.ffn_out_b, 1, false);
    add(prefix + "ffn.ln.gamma", layer.ffn_ln_gamma, 1, false);
    add(prefix + "ffn.ln.beta", layer.ffn_ln_beta, 1, false);
  }
  add("head.weight", p.head_w, 2, true);
  add("head.bias", p.head_b, 1, false);
  return out;
}

// Uniform double in [0, 1) from the top 53 bits; identical across platforms.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
struct LayerNormCache {
  Matrix<T> xhat;
  std::vector<T> rstd;
};

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, const Matrix<T>& gamma,
                     const Matrix<T>& beta, LayerNormCache<T>* cache) {
  const auto n = x.rows();
  const auto h = x.cols();
  Matrix<T> y(n, h);
  if (cache != nullptr) {
    cache->xhat.resize(n, h);
    cache->rstd.resize(n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = x.row(i).mean();
    const auto centered = (x.row(i).array() - mean).eval();
    const T var = centered.square().mean();
    const T rstd = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    const auto xhat = (centered * rstd).eval();
    y.row(i) = (xhat * gamma.row(0).array() + beta.row(0).array()).matrix();
    if (cache != nullptr) {
      cache->xhat.row(i) = xhat.matrix();
      cache->rstd[i] = rstd;
    }
  }
  return y;
}

template <typename T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const Matrix<T>& gamma,
                              const LayerNormCache<T>& cache, Matrix<T>& dgamma,
                              Matrix<T>& dbeta) {
  dgamma.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta.row(0) += dy.colwise().sum();
  Matrix<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const auto dxhat = (dy.row(i).array() * gamma.row(0).array()).eval();
    const T mean_dxhat = dxhat.mean();
    const T mean_dxhat_xhat = (dxhat * cache.xhat.row(i).array()).mean();
    dx.row(i) = (cache.rstd[i] * (dxhat - mean_dxhat -
                                  cache.xhat.row(i).array() * mean_dxhat_xhat))
                    .matrix();
  }
  return dx;
}

template <typename T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <typename T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
  const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * T(M_PI));
  return cdf + x * pdf;
}

// Scales kept activations by 1/(1-p); records the mask for backward.
template <typename T>
void dropout(Matrix<T>& x, double rate, std::mt19937_64* rng, Matrix<T>& mask) {
  if (rng == nullptr || rate <= 0.0) {
    mask.resize(0, 0);
    return;
  }
  mask.resize(x.rows(), x.cols());
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = unit_uniform(*rng) >= rate ? keep_scale : T(0);
  }
  x.array() *= mask.array();
}

template <typename T>
void apply_mask(Matrix<T>& dx, const Matrix<T>& mask) {
  if (mask.size() > 0) dx.array() *= mask.array();
}

template <typename T>
void add_bias(Matrix<T>& x, const Matrix<T>& bias) {
  x.rowwise() += bias.row(0);
}

template <typename T>
struct LayerCache {
  Matrix<T> input, q, k, v, context;
  std::vector<Matrix<T>> attention;  // [example * heads + head], S x S
  Matrix<T> attention_dropout;
  LayerNormCache<T> attention_ln;
  Matrix<T> y1, ffn_pre, ffn_act, ffn_dropout;
  LayerNormCache<T> ffn_ln;
};

template <typename T>
struct Trace {
  LayerNormCache<T> embedding_ln;
  Matrix<T> embedding_dropout;
  std::vector<LayerCache<T>> layers;
  Matrix<T> head_input, head_dropout;
  Matrix<T> logits;
};

void check_batch(const ModelConfig& config, const Batch& batch) {
  if (batch.size < 1) throw DataError("batch is empty");
  if (batch.length > config.max_seq_len) {
    throw DataError("sequence length " + std::to_string(batch.length) +
                    " exceeds max_seq_len " + std::to_string(config.max_seq_len));
  }
  const auto n = static_cast<size_t>(batch.size) * batch.length;
  if (batch.input_ids.size() != n || batch.segment_ids.size() != n ||
      batch.attention_mask.size() != n || batch.labels.size() != n ||
      batch.loss_mask.size() != n) {
    throw DataError("batch arrays do not match size x length");
  }
  for (size_t i = 0; i < n; ++i) {
    if (batch.input_ids[i] < 0 || batch.input_ids[i] >= config.vocab_size) {
      throw DataError("token id " + std::to_string(batch.input_ids[i]) +
                      " outside vocabulary of size " +
                      std::to_string(config.vocab_size));
    }
    if (batch.segment_ids[i] != 0 && batch.segment_ids[i] != 1) {
      throw DataError("segment id must be 0 or 1");
    }
    if (batch.loss_mask[i] != 0 &&
        (batch.labels[i] < 0 || batch.labels[i] >= config.num_labels)) {
      throw DataError("label " + std::to_string(batch.labels[i]) +
                      " outside [0, num_labels)");
    }
  }
}

template <typename T>
void attention_forward(const Batch& batch, int32_t heads, LayerCache<T>& c) {
  const int32_t s = batch.length;
  const auto head_dim = static_cast<int32_t>(c.q.cols()) / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(head_dim));
  c.context = Matrix<T>::Zero(c.q.rows(), c.q.cols());
  c.attention.assign(static_cast<size_t>(batch.size) * heads, Matrix<T>());
  for (int32_t b = 0; b < batch.size; ++b) {
    const int32_t r0 = b * s;
    for (int32_t h = 0; h < heads; ++h) {
      const int32_t c0 = h * head_dim;
      const Matrix<T> scores = (c.q.block(r0, c0, s, head_dim) *
                                c.k.block(r0, c0, s, head_dim).transpose()) *
                               scale;
      Matrix<T> p = Matrix<T>::Zero(s, s);
      for (int32_t i = 0; i < s; ++i) {
        if (batch.attention_mask[batch.at(b, i)] == 0) continue;
        T max_score = -std::numeric_limits<T>::infinity();
        for (int32_t j = 0; j < s; ++j) {
          if (batch.attention_mask[batch.at(b, j)] != 0) {
            max_score = std::max(max_score, scores(i, j));
          }
        }
        T total = 0;
        for (int32_t j = 0; j < s; ++j) {
          if (batch.attention_mask[batch.at(b, j)] != 0) {
            p(i, j) = std::exp(scores(i, j) - max_score);
            total += p(i, j);
          }
        }
        p.row(i) /= total;
      }
      c.context.block(r0, c0, s, head_dim) = p * c.v.block(r0, c0, s, head_dim);
      c.attention[static_cast<size_t>(b) * heads + h] = std::move(p);
    }
  }
}

template <typename T>
void attention_backward(const Batch& batch, int32_t heads,
                        const LayerCache<T>& c, const Matrix<T>& dcontext,
                        Matrix<T>& dq, Matrix<T>& dk, Matrix<T>& dv) {
  const int32_t s = batch.length;
  const auto head_dim = static_cast<int32_t>(c.q.cols()) / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(head_dim));
  dq = Matrix<T>::Zero(c.q.rows(), c.q.cols());
  dk = Matrix<T>::Zero(c.q.rows(), c.q.cols());
  dv = Matrix<T>::Zero(c.q.rows(), c.q.cols());
  for (int32_t b = 0; b < batch.size; ++b) {
    const int32_t r0 = b * s;
    for (int32_t h = 0; h < heads; ++h) {
      const int32_t c0 = h * head_dim;
      const Matrix<T>& p = c.attention[static_cast<size_t>(b) * heads + h];
      const auto dctx = dcontext.block(r0, c0, s, head_dim);
      const Matrix<T> dp = dctx * c.v.block(r0, c0, s, head_dim).transpose();
      dv.block(r0, c0, s, head_dim) = p.transpose() * dctx;
      Matrix<T> ds(s, s);
      for (int32_t i = 0; i < s; ++i) {
        const T dot = p.row(i).dot(dp.row(i));
        ds.row(i) = (p.row(i).array() * (dp.row(i).array() - dot)).matrix();
      }
      dq.block(r0, c0, s, head_dim) = (ds * c.k.block(r0, c0, s, head_dim)) * scale;
      dk.block(r0, c0, s, head_dim) =
          (ds.transpose() * c.q.block(r0, c0, s, head_dim)) * scale;
    }
  }
}

template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& logits) {
  Matrix<T> p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const T m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

// Returns logits [N, num_labels]; fills the trace.
template <typename T>
Matrix<T> run_forward(const BasicModel<T>& model, const Batch& batch,
                      const ForwardOptions& options, Trace<T>& trace) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  check_batch(cfg, batch);
  const bool train = options.mode == Mode::kTrain && cfg.dropout_rate > 0.0;
  std::mt19937_64 rng(options.dropout_seed);
  std::mt19937_64* drop_rng = train ? &rng : nullptr;

  const Eigen::Index n = static_cast<Eigen::Index>(batch.size) * batch.length;
  Matrix<T> x(n, cfg.hidden_dim);
  for (int32_t b = 0; b < batch.size; ++b) {
    for (int32_t t = 0; t < batch.length; ++t) {
      const int32_t i = batch.at(b, t);
      x.row(i) = p.token_embedding.row(batch.input_ids[i]) +
                 p.position_embedding.row(t) +
                 p.segment_embedding.row(batch.segment_ids[i]);
    }
  }
  x = layer_norm(x, p.embedding_ln_gamma, p.embedding_ln_beta,
                 &trace.embedding_ln);
  dropout(x, cfg.dropout_rate, drop_rng, trace.embedding_dropout);

  trace.layers.resize(p.layers.size());
  for (size_t l = 0; l < p.layers.size(); ++l) {
    const auto& lp = p.layers[l];
    auto& c = trace.layers[l];
    c.input = x;
    c.q = x * lp.query_w;
    add_bias(c.q, lp.query_b);
    c.k = x * lp.key_w;
    c.v = x * lp.value_w;
    add_bias(c.v, lp.value_b);
    attention_forward(batch, cfg.num_heads, c);
    Matrix<T> a = c.context * lp.output_w;
    add_bias(a, lp.output_b);
    dropout(a, cfg.dropout_rate, drop_rng, c.attention_dropout);
    c.y1 = layer_norm<T>(x + a, lp.attention_ln_gamma, lp.attention_ln_beta,
                         &c.attention_ln);
    c.ffn_pre = c.y1 * lp.ffn_in_w;
    add_bias(c.ffn_pre, lp.ffn_in_b);
    c.ffn_act = c.ffn_pre.unaryExpr([](T v) { return gelu(v); });
    Matrix<T> z = c.ffn_act * lp.ffn_out_w;
    add_bias(z, lp.ffn_out_b);
    dropout(z, cfg.dropout_rate, drop_rng, c.ffn_dropout);
    x = layer_norm<T>(c.y1 + z, lp.ffn_ln_gamma, lp.ffn_ln_beta, &c.ffn_ln);
  }

  dropout(x, cfg.dropout_rate, drop_rng, trace.head_dropout);
  trace.head_input = std::move(x);
  Matrix<T> logits = trace.head_input * p.head_w;
  add_bias(logits, p.head_b);
  return logits;
}

int64_t count_loss_positions(const Batch& batch) {
  int64_t count = 0;
  for (int32_t v : batch.loss_mask) count += v != 0 ? 1 : 0;
  if (count == 0) throw DataError("batch has no positions with loss_mask = 1");
  return count;
}

// Cross-entropy from logits with log-sum-exp.
template <typename T>
double logits_loss(const Matrix<T>& logits, const Batch& batch) {
  const int64_t count = count_loss_positions(batch);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (batch.loss_mask[i] == 0) continue;
    const double m = static_cast<double>(logits.row(i).maxCoeff());
    double sum = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      sum += std::exp(static_cast<double>(logits(i, j)) - m);
    }
    total += m + std::log(sum) - static_cast<double>(logits(i, batch.labels[i]));
  }
  return total / static_cast<double>(count);
}

template <typename T>
double forward_loss(const BasicModel<T>& model, const Batch& batch) {
  Trace<T> trace;
  return logits_loss(run_forward(model, batch, {}, trace), batch);
}

template <typename T>
GradientCheckResult check_gradients(const BasicModel<T>& model, const Batch& batch,
                                    double epsilon, int32_t samples, uint64_t seed) {
  if (!(epsilon > 0.0)) throw UsageError("gradient check epsilon must be positive");
  if (samples < 1) throw UsageError("samples per tensor must be positive");
  const auto analytic = backward(model, batch, {});
  if (!std::isfinite(analytic.loss)) {
    throw NumericError("non-finite loss in gradient check");
  }
  BasicModel<T> probe = model;
  auto values = probe.params.tensors();
  const auto grads = analytic.gradients.tensors();
  std::mt19937_64 rng(seed);
  GradientCheckResult result;
  for (size_t t = 0; t < values.size(); ++t) {
    const auto size = static_cast<int64_t>(values[t].value->size());
    std::vector<int64_t> coords(size);
    std::iota(coords.begin(), coords.end(), 0);
    if (size > samples) {
      // Partial Fisher-Yates: the first `samples` entries are the sample.
      for (int64_t i = 0; i < samples; ++i) {
        const int64_t j = i + static_cast<int64_t>(rng() % static_cast<uint64_t>(size - i));
        std::swap(coords[i], coords[j]);
      }
      coords.resize(samples);
    }
    T* data = values[t].value->data();
    for (int64_t idx : coords) {
      const T original = data[idx];
      data[idx] = original + static_cast<T>(epsilon);
      const double plus = forward_loss(probe, batch);
      data[idx] = original - static_cast<T>(epsilon);
      const double minus = forward_loss(probe, batch);
      data[idx] = original;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("non-finite loss while perturbing " + values[t].name);
      }
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double exact = static_cast<double>(grads[t].value->data()[idx]);
      const double rel =
          std::abs(exact - numeric) / (std::abs(exact) + std::abs(numeric) + 1e-12);
      ++result.coordinates_checked;
      if (rel > result.max_relative_error || result.worst_index < 0) {
        result.max_relative_error = rel;
        result.worst_tensor = values[t].name;
        result.worst_index = idx;
      }
    }
  }
  return result;
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 1 || hidden_dim < 1 || num_layers < 0 || num_heads < 1 ||
      ffn_dim < 1 || max_seq_len < 1) {
    throw UsageError("model sizes must be positive");
  }
  if (hidden_dim % num_heads != 0) {
    throw UsageError("hidden_dim " + std::to_string(hidden_dim) +
                     " is not divisible by num_heads " +
                     std::to_string(num_heads));
  }
  if (num_labels < 2) throw UsageError("num_labels must be at least 2");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw UsageError("dropout_rate must be in [0, 1)");
  }
}

int64_t parameter_count(const ModelConfig& c) {
  const int64_t h = c.hidden_dim;
  const int64_t f = c.ffn_dim;
  const int64_t embeddings = (static_cast<int64_t>(c.vocab_size) + c.max_seq_len + 2) * h + 2 * h;
  // Q (weight + bias), K (weight), V and O (weight + bias), two layer norms,
  // and the feed-forward pair.
  const int64_t layer = (h * h + h) + h * h + 2 * (h * h + h) + 4 * h +
                        (h * f + f) + (f * h + h);
  const int64_t head = h * c.num_labels + c.num_labels;
  return embeddings + c.num_layers * layer + head;
}

template <typename T>
std::vector<NamedTensor<Matrix<T>>> Parameters<T>::tensors() {
  return collect<Matrix<T>>(*this);
}

template <typename T>
std::vector<NamedTensor<const Matrix<T>>> Parameters<T>::tensors() const {
  return collect<const Matrix<T>>(*this);
}

template <typename T>
Parameters<T> Parameters<T>::zeros(const ModelConfig& c) {
  c.validate();
  const int32_t h = c.hidden_dim;
  Parameters<T> p;
  p.token_embedding = Matrix<T>::Zero(c.vocab_size, h);
  p.position_embedding = Matrix<T>::Zero(c.max_seq_len, h);
  p.segment_embedding = Matrix<T>::Zero(2, h);
  p.embedding_ln_gamma = Matrix<T>::Zero(1, h);
  p.embedding_ln_beta = Matrix<T>::Zero(1, h);
  p.layers.resize(c.num_layers);
  for (auto& l : p.layers) {
    l.query_w = Matrix<T>::Zero(h, h);
    l.query_b = Matrix<T>::Zero(1, h);
    l.key_w = Matrix<T>::Zero(h, h);
    l.value_w = Matrix<T>::Zero(h, h);
    l.value_b = Matrix<T>::Zero(1, h);
    l.output_w = Matrix<T>::Zero(h, h);
    l.output_b = Matrix<T>::Zero(1, h);
    l.attention_ln_gamma = Matrix<T>::Zero(1, h);
    l.attention_ln_beta = Matrix<T>::Zero(1, h);
    l.ffn_in_w = Matrix<T>::Zero(h, c.ffn_dim);
    l.ffn_in_b = Matrix<T>::Zero(1, c.ffn_dim);
    l.ffn_out_w = Matrix<T>::Zero(c.ffn_dim, h);
    l.ffn_out_b = Matrix<T>::Zero(1, h);
    l.ffn_ln_gamma = Matrix<T>::Zero(1, h);
    l.ffn_ln_beta = Matrix<T>::Zero(1, h);
  }
  p.head_w = Matrix<T>::Zero(h, c.num_labels);
  p.head_b = Matrix<T>::Zero(1, c.num_labels);
  return p;
}

Model init_model(const ModelConfig& config) {
  Model model;
  model.config = config;
  model.params = Parameters<float>::zeros(config);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, kInitStd);
  for (auto& t : model.params.tensors()) {
    const bool is_gamma = t.name.ends_with(".gamma");
    if (t.rank == 2) {
      for (Eigen::Index i = 0; i < t.value->size(); ++i) {
        t.value->data()[i] = static_cast<float>(normal(rng));
      }
    } else if (is_gamma) {
      t.value->setOnes();
    }
  }
  return model;
}

Batch Batch::stack(std::span<const EncodedExample* const> examples,
                   bool trim_padding) {
  if (examples.empty()) throw DataError("cannot stack an empty batch");
  Batch batch;
  batch.size = static_cast<int32_t>(examples.size());
  const int32_t full = examples.front()->length();
  for (const auto* ex : examples) {
    if (ex->length() != full) throw DataError("batch examples differ in length");
  }
  batch.length = full;
  if (trim_padding) {
    batch.length = 1;
    for (const auto* ex : examples) {
      for (int32_t t = full - 1; t >= 0; --t) {
        if (ex->attention_mask[t] != 0) {
          batch.length = std::max(batch.length, t + 1);
          break;
        }
      }
    }
  }
  const size_t n = static_cast<size_t>(batch.size) * batch.length;
  batch.input_ids.reserve(n);
  batch.segment_ids.reserve(n);
  batch.attention_mask.reserve(n);
  batch.labels.reserve(n);
  batch.loss_mask.reserve(n);
  for (const auto* ex : examples) {
    const auto end = static_cast<std::ptrdiff_t>(batch.length);
    batch.input_ids.insert(batch.input_ids.end(), ex->input_ids.begin(),
                           ex->input_ids.begin() + end);
    batch.segment_ids.insert(batch.segment_ids.end(), ex->segment_ids.begin(),
                             ex->segment_ids.begin() + end);
    batch.attention_mask.insert(batch.attention_mask.end(),
                                ex->attention_mask.begin(),
                                ex->attention_mask.begin() + end);
    batch.labels.insert(batch.labels.end(), ex->labels.begin(),
                        ex->labels.begin() + end);
    batch.loss_mask.insert(batch.loss_mask.end(), ex->loss_mask.begin(),
                           ex->loss_mask.begin() + end);
  }
  return batch;
}

Batch Batch::stack(std::span<const EncodedExample> examples, bool trim_padding) {
  std::vector<const EncodedExample*> ptrs;
  ptrs.reserve(examples.size());
  for (const auto& ex : examples) ptrs.push_back(&ex);
  return stack(std::span<const EncodedExample* const>(ptrs), trim_padding);
}

Batch random_batch(const ModelConfig& config, int32_t size, int32_t length,
                   uint64_t seed) {
  if (size < 1 || length < 2) throw UsageError("random batch needs size >= 1, length >= 2");
  std::mt19937_64 rng(seed);
  auto below = [&](int32_t n) { return static_cast<int32_t>(rng() % static_cast<uint64_t>(n)); };
  Batch batch;
  batch.size = size;
  batch.length = length;
  for (int32_t b = 0; b < size; ++b) {
    const int32_t attended = 2 + below(length - 1);
    const int32_t boundary = 1 + below(attended - 1);
    for (int32_t t = 0; t < length; ++t) {
      const bool on = t < attended;
      batch.input_ids.push_back(on ? below(config.vocab_size) : 0);
      batch.segment_ids.push_back(on && t >= boundary ? 1 : 0);
      batch.attention_mask.push_back(on ? 1 : 0);
      batch.labels.push_back(on ? below(config.num_labels) : 0);
      batch.loss_mask.push_back(on && t > 0 ? 1 : 0);
    }
  }
  return batch;
}

template <typename T>
Matrix<T> forward(const BasicModel<T>& model, const Batch& batch,
                  const ForwardOptions& options) {
  Trace<T> trace;
  return softmax_rows(run_forward(model, batch, options, trace));
}

template <typename T>
double loss(const Matrix<T>& probabilities, const Batch& batch) {
  const int64_t count = count_loss_positions(batch);
  double total = 0.0;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    if (batch.loss_mask[i] == 0) continue;
    total -= std::log(static_cast<double>(probabilities(i, batch.labels[i])));
  }
  return total / static_cast<double>(count);
}

template <typename T>
LossAndGradients<T> backward(const BasicModel<T>& model, const Batch& batch,
                             const ForwardOptions& options) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  Trace<T> trace;
  const Matrix<T> logits = run_forward(model, batch, options, trace);
  LossAndGradients<T> out;
  out.loss = logits_loss(logits, batch);
  auto& g = out.gradients;
  g = Parameters<T>::zeros(cfg);

  const T inv_count = T(1) / static_cast<T>(count_loss_positions(batch));
  Matrix<T> dlogits = softmax_rows(logits);
  for (Eigen::Index i = 0; i < dlogits.rows(); ++i) {
    if (batch.loss_mask[i] == 0) {
      dlogits.row(i).setZero();
    } else {
      dlogits(i, batch.labels[i]) -= T(1);
      dlogits.row(i) *= inv_count;
    }
  }
  g.head_w = trace.head_input.transpose() * dlogits;
  g.head_b = dlogits.colwise().sum();
  Matrix<T> dx = dlogits * p.head_w.transpose();
  apply_mask(dx, trace.head_dropout);

  for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l) {
    const auto& lp = p.layers[l];
    auto& gl = g.layers[l];
    const auto& c = trace.layers[l];

    const Matrix<T> dr2 = layer_norm_backward(dx, lp.ffn_ln_gamma, c.ffn_ln,
                                              gl.ffn_ln_gamma, gl.ffn_ln_beta);
    Matrix<T> dz = dr2;
    apply_mask(dz, c.ffn_dropout);
    gl.ffn_out_w = c.ffn_act.transpose() * dz;
    gl.ffn_out_b = dz.colwise().sum();
    Matrix<T> dpre = dz * lp.ffn_out_w.transpose();
    dpre.array() *= c.ffn_pre.unaryExpr([](T v) { return gelu_grad(v); }).array();
    gl.ffn_in_w = c.y1.transpose() * dpre;
    gl.ffn_in_b = dpre.colwise().sum();
    Matrix<T> dy1 = dr2 + dpre * lp.ffn_in_w.transpose();

    const Matrix<T> dr1 = layer_norm_backward(dy1, lp.attention_ln_gamma,
                                              c.attention_ln, gl.attention_ln_gamma,
                                              gl.attention_ln_beta);
    Matrix<T> da = dr1;
    apply_mask(da, c.attention_dropout);
    gl.output_w = c.context.transpose() * da;
    gl.output_b = da.colwise().sum();
    const Matrix<T> dcontext = da * lp.output_w.transpose();
    Matrix<T> dq, dk, dv;
    attention_backward(batch, cfg.num_heads, c, dcontext, dq, dk, dv);
    gl.query_w = c.input.transpose() * dq;
    gl.query_b = dq.colwise().sum();
    gl.key_w = c.input.transpose() * dk;
    gl.value_w = c.input.transpose() * dv;
    gl.value_b = dv.colwise().sum();
    dx = dr1 + dq * lp.query_w.transpose() + dk * lp.key_w.transpose() +
         dv * lp.value_w.transpose();
  }

  apply_mask(dx, trace.embedding_dropout);
  const Matrix<T> de = layer_norm_backward(dx, p.embedding_ln_gamma,
                                           trace.embedding_ln, g.embedding_ln_gamma,
                                           g.embedding_ln_beta);
  for (int32_t b = 0; b < batch.size; ++b) {
    for (int32_t t = 0; t < batch.length; ++t) {
      const int32_t i = batch.at(b, t);
      g.token_embedding.row(batch.input_ids[i]) += de.row(i);
      g.position_embedding.row(t) += de.row(i);
      g.segment_embedding.row(batch.segment_ids[i]) += de.row(i);
    }
  }
  return out;
}

GradientCheckResult gradient_check(const BasicModel<double>& model,
                                   const Batch& batch, double epsilon,
                                   int32_t samples_per_tensor, uint64_t seed) {
  return check_gradients(model, batch, epsilon, samples_per_tensor, seed);
}

GradientCheckResult gradient_check(const Model& model, const Batch& batch,
                                   double epsilon, int32_t samples_per_tensor,
                                   uint64_t seed) {
  return check_gradients(cast_model<double>(model), batch, epsilon,
                         samples_per_tensor, seed);
}

template <typename T>
std::vector<int32_t> argmax_labels(const Matrix<T>& probabilities) {
  std::vector<int32_t> out(probabilities.rows());
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < probabilities.cols(); ++j) {
      if (probabilities(i, j) > probabilities(i, best)) best = j;
    }
    out[i] = static_cast<int32_t>(best);
  }
  return out;
}

#define ZSNER_INSTANTIATE(T)                                                  \
  template struct Parameters<T>;                                              \
  template Matrix<T> forward<T>(const BasicModel<T>&, const Batch&,           \
                                const ForwardOptions&);                       \
  template double loss<T>(const Matrix<T>&, const Batch&);                    \
  template LossAndGradients<T> backward<T>(const BasicModel<T>&, const Batch&, \
                                           const ForwardOptions&);            \
  template std::vector<int32_t> argmax_labels<T>(const Matrix<T>&);

ZSNER_INSTANTIATE(float)
ZSNER_INSTANTIATE(double)

#undef ZSNER_INSTANTIATE

}  // namespace zsner
