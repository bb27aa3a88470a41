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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "zsner/encoder.h"
#include "zsner/error.h"

namespace zsner {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.vocab_size = 100;
  c.hidden_dim = 16;
  c.num_layers = 2;
  c.num_heads = 2;
  c.ffn_dim = 32;
  c.max_seq_len = 24;
  c.dropout_rate = 0.1;
  c.seed = 3;
  return c;
}

// Hand-written count, tensor by tensor.
int64_t count_by_hand(const ModelConfig& c) {
  const int64_t h = c.hidden_dim, f = c.ffn_dim;
  const int64_t embeddings = c.vocab_size * h + c.max_seq_len * h + 2 * h + h + h;
  const int64_t attention = (h * h + h) + h * h + (h * h + h) + (h * h + h) + 2 * h;
  const int64_t ffn = (h * f + f) + (f * h + h) + 2 * h;
  const int64_t head = h * c.num_labels + c.num_labels;
  return embeddings + c.num_layers * (attention + ffn) + head;
}

Batch two_position_batch(int32_t label0, int32_t label1) {
  Batch b;
  b.size = 1;
  b.length = 2;
  b.input_ids = {5, 6};
  b.segment_ids = {0, 1};
  b.attention_mask = {1, 1};
  b.labels = {label0, label1};
  b.loss_mask = {1, 1};
  return b;
}

TEST_CASE("parameter count matches the closed form and the tensor walk") {
  for (auto c : {small_config(), ModelConfig{.vocab_size = 2000}}) {
    const auto model = init_model(c);
    CHECK(parameter_count(c) == count_by_hand(c));
    CHECK(count_parameters(model.params) == count_by_hand(c));
  }
  // hidden 16, 2 layers, 2 heads, ffn 64, vocab 100, 128 positions:
  // 3712 embedding + 2 * 3264 per layer + 34 head.
  ModelConfig c;
  c.vocab_size = 100;
  c.hidden_dim = 16;
  c.ffn_dim = 64;
  CHECK(parameter_count(c) == 10274);
}

TEST_CASE("invalid configurations are rejected") {
  auto c = small_config();
  c.hidden_dim = 10;
  c.num_heads = 4;
  CHECK_THROWS_AS(c.validate(), UsageError);
  CHECK_THROWS_AS(init_model(c), UsageError);
  c = small_config();
  c.num_labels = 1;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = small_config();
  c.dropout_rate = 1.0;
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("initialization is deterministic per seed") {
  const auto a = init_model(small_config());
  const auto b = init_model(small_config());
  auto c_config = small_config();
  c_config.seed = 4;
  const auto c = init_model(c_config);
  const auto ta = a.params.tensors();
  const auto tb = b.params.tensors();
  bool differs = false;
  for (size_t i = 0; i < ta.size(); ++i) {
    CHECK(*ta[i].value == *tb[i].value);
    if (*ta[i].value != *c.params.tensors()[i].value) differs = true;
  }
  CHECK(differs);
  CHECK(a.params.embedding_ln_gamma.isOnes());
  CHECK(a.params.head_b.isZero());
}

TEST_CASE("tensor names are unique and decay covers matrices only") {
  const auto model = init_model(small_config());
  std::set<std::string> names;
  for (const auto& t : model.params.tensors()) {
    CHECK(names.insert(t.name).second);
    CHECK(t.decay == (t.rank == 2));
    if (t.rank == 1) CHECK(t.value->rows() == 1);
  }
  CHECK(names.count("head.weight") == 1);
  CHECK(names.count("layer.1.attention.key.weight") == 1);
}

TEST_CASE("probabilities sum to one") {
  const auto model = init_model(small_config());
  const auto batch = random_batch(model.config, 4, 12, 1);
  const auto probs = forward(model, batch);
  REQUIRE(probs.rows() == 48);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    CHECK(std::abs(probs.row(r).sum() - 1.0f) < 1e-6f);
    CHECK((probs.row(r).array() >= 0).all());
  }
}

TEST_CASE("eval forward is bit-identical across runs") {
  const auto model = init_model(small_config());
  const auto batch = random_batch(model.config, 3, 10, 2);
  CHECK(forward(model, batch) == forward(model, batch));
  ForwardOptions train{Mode::kTrain, 7};
  CHECK(forward(model, batch, train) == forward(model, batch, train));
  ForwardOptions other{Mode::kTrain, 8};
  CHECK(forward(model, batch, train) != forward(model, batch, other));
}

TEST_CASE("padding does not change attended outputs") {
  const auto model = init_model(small_config());
  auto batch = random_batch(model.config, 3, 14, 5);
  const auto base = forward(model, batch);
  auto noisy = batch;
  for (int32_t b = 0; b < batch.size; ++b) {
    for (int32_t t = 0; t < batch.length; ++t) {
      if (batch.attention_mask[batch.at(b, t)] == 0) {
        noisy.input_ids[noisy.at(b, t)] = 1 + (b + t) % 50;
        noisy.segment_ids[noisy.at(b, t)] = 1;
      }
    }
  }
  const auto changed = forward(model, noisy);
  float worst = 0.0f;
  for (int32_t b = 0; b < batch.size; ++b) {
    for (int32_t t = 0; t < batch.length; ++t) {
      if (batch.attention_mask[batch.at(b, t)] == 1) {
        const auto r = batch.at(b, t);
        worst = std::max(worst, (base.row(r) - changed.row(r)).cwiseAbs().maxCoeff());
      }
    }
  }
  CHECK(worst <= 1e-6f);
}

TEST_CASE("appending padding leaves probabilities unchanged") {
  const auto model = init_model(small_config());
  const auto batch = random_batch(model.config, 2, 10, 6);
  Batch longer;
  longer.size = batch.size;
  longer.length = batch.length + 6;
  for (int32_t b = 0; b < batch.size; ++b) {
    for (int32_t t = 0; t < longer.length; ++t) {
      const bool old = t < batch.length;
      longer.input_ids.push_back(old ? batch.input_ids[batch.at(b, t)] : 0);
      longer.segment_ids.push_back(old ? batch.segment_ids[batch.at(b, t)] : 0);
      longer.attention_mask.push_back(old ? batch.attention_mask[batch.at(b, t)] : 0);
      longer.labels.push_back(old ? batch.labels[batch.at(b, t)] : 0);
      longer.loss_mask.push_back(old ? batch.loss_mask[batch.at(b, t)] : 0);
    }
  }
  const auto a = forward(model, batch);
  const auto b = forward(model, longer);
  float worst = 0.0f;
  for (int32_t i = 0; i < batch.size; ++i) {
    for (int32_t t = 0; t < batch.length; ++t) {
      if (batch.attention_mask[batch.at(i, t)] == 0) continue;
      worst = std::max(worst, (a.row(batch.at(i, t)) - b.row(longer.at(i, t))).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst <= 1e-6f);
}

TEST_CASE("first-segment tokens change second-segment outputs") {
  const auto model = init_model(small_config());
  int changed = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    auto batch = random_batch(model.config, 1, 10, seed);
    const auto base = forward(model, batch);
    for (int32_t t = 1; t < batch.length; ++t) {
      if (batch.segment_ids[t] == 0 && batch.attention_mask[t] == 1) {
        batch.input_ids[t] = (batch.input_ids[t] + 7) % model.config.vocab_size;
      }
    }
    const auto after = forward(model, batch);
    for (int32_t t = 0; t < batch.length; ++t) {
      if (batch.segment_ids[t] == 1 && batch.attention_mask[t] == 1 &&
          (base.row(t) - after.row(t)).cwiseAbs().maxCoeff() > 1e-7f) {
        ++changed;
        break;
      }
    }
  }
  CHECK(changed > 0);
}

TEST_CASE("segment ids change the output") {
  const auto model = init_model(small_config());
  auto batch = random_batch(model.config, 1, 8, 9);
  const auto base = forward(model, batch);
  for (auto& s : batch.segment_ids) s = 1 - s;
  const auto flipped = forward(model, batch);
  CHECK((base - flipped).cwiseAbs().maxCoeff() > 1e-6f);
}

TEST_CASE("loss values") {
  // Uniform predictions.
  Matrix<double> uniform = Matrix<double>::Constant(2, 2, 0.5);
  CHECK(loss(uniform, two_position_batch(0, 1)) == doctest::Approx(std::log(2.0)));
  // Perfect one-hot predictions.
  Matrix<double> perfect(2, 2);
  perfect << 1, 0, 0, 1;
  CHECK(loss(perfect, two_position_batch(0, 1)) == doctest::Approx(0.0));
  // Gold probabilities 0.9 and 0.6.
  Matrix<double> hand(2, 2);
  hand << 0.9, 0.1, 0.4, 0.6;
  CHECK(loss(hand, two_position_batch(0, 1)) ==
        doctest::Approx(-(std::log(0.9) + std::log(0.6)) / 2));
  auto masked = two_position_batch(0, 1);
  masked.loss_mask = {0, 0};
  CHECK_THROWS_AS(loss(hand, masked), DataError);
}

TEST_CASE("backward reports the forward loss") {
  const auto model = cast_model<double>(init_model(small_config()));
  const auto batch = random_batch(model.config, 2, 9, 4);
  const auto result = backward(model, batch);
  CHECK(result.loss == doctest::Approx(loss(forward(model, batch), batch)).epsilon(1e-12));
}

// Central differences converge to the analytic gradient: at eps = 1e-4 the
// truncation term is about 1e-8 and round-off about 1e-12, far below the
// gradient scale. Near-zero coordinates make a pure relative bound
// meaningless, so the tolerance is absolute, set against the mean |g|.
TEST_CASE("analytic gradients match central differences") {
  auto c = small_config();
  c.vocab_size = 50;
  c.dropout_rate = 0.0;
  for (uint64_t seed = 0; seed < 3; ++seed) {
    c.seed = seed;
    auto model = cast_model<double>(init_model(c));
    const auto batch = random_batch(c, 3, 12, seed);
    const auto grads = backward(model, batch).gradients;
    std::mt19937_64 rng(seed);
    auto params = model.params.tensors();
    const auto g = grads.tensors();
    for (size_t i = 0; i < params.size(); ++i) {
      const double scale = g[i].value->cwiseAbs().mean() + 1e-12;
      double worst = 0.0;
      for (int s = 0; s < 20; ++s) {
        const auto idx = static_cast<Eigen::Index>(rng() % params[i].value->size());
        double* p = params[i].value->data() + idx;
        const double saved = *p;
        *p = saved + 1e-4;
        const double up = loss(forward(model, batch), batch);
        *p = saved - 1e-4;
        const double down = loss(forward(model, batch), batch);
        *p = saved;
        const double numeric = (up - down) / 2e-4;
        worst = std::max(worst, std::abs(numeric - g[i].value->data()[idx]) / scale);
      }
      INFO(params[i].name);
      CHECK(worst < 1e-3);
    }
  }
}

TEST_CASE("gradient check reports coordinates and rejects zero epsilon") {
  auto c = small_config();
  c.vocab_size = 50;
  const auto model = init_model(c);
  const auto batch = random_batch(c, 2, 8, 0);
  const auto result = gradient_check(model, batch, 1e-4, 10, 0);
  CHECK(result.coordinates_checked > 0);
  CHECK(result.coordinates_checked <= 10 * static_cast<int64_t>(model.params.tensors().size()));
  CHECK_FALSE(result.worst_tensor.empty());
  CHECK_THROWS_AS(gradient_check(model, batch, 0.0), UsageError);
}

TEST_CASE("gradient check error shrinks quadratically with epsilon") {
  auto c = small_config();
  c.vocab_size = 50;
  c.dropout_rate = 0.0;
  auto model = cast_model<double>(init_model(c));
  const auto batch = random_batch(c, 3, 12, 0);
  const auto grads = backward(model, batch).gradients;
  // Position embeddings sit right before a layer norm with a small input
  // scale, which gives them the largest third derivative.
  double* p = model.params.position_embedding.data() + 5;
  const double analytic = grads.position_embedding.data()[5];
  auto error = [&](double eps) {
    const double saved = *p;
    *p = saved + eps;
    const double up = loss(forward(model, batch), batch);
    *p = saved - eps;
    const double down = loss(forward(model, batch), batch);
    *p = saved;
    return std::abs((up - down) / (2 * eps) - analytic);
  };
  const double ratio = error(1e-3) / error(1e-4);
  CHECK(ratio > 50.0);
  CHECK(ratio < 200.0);
}

TEST_CASE("unused embedding rows get exactly zero gradient") {
  const auto model = cast_model<double>(init_model(small_config()));
  auto batch = random_batch(model.config, 2, 6, 1);
  for (auto& id : batch.input_ids) id = id % 10;
  const auto grads = backward(model, batch).gradients;
  CHECK(grads.token_embedding.bottomRows(50).isZero(0.0));
}

TEST_CASE("bad batches are rejected") {
  const auto model = init_model(small_config());
  auto batch = random_batch(model.config, 1, 6, 1);
  batch.input_ids[0] = 1000;
  CHECK_THROWS_AS(forward(model, batch), DataError);
  batch = random_batch(model.config, 1, 30, 1);
  CHECK_THROWS_AS(forward(model, batch), DataError);
}

TEST_CASE("argmax labels") {
  Matrix<float> p(3, 2);
  p << 0.7f, 0.3f, 0.2f, 0.8f, 0.5f, 0.5f;
  CHECK(argmax_labels(p) == std::vector<int32_t>{0, 1, 0});
}

}  // namespace
}  // namespace zsner
