// tests/test_lstm_train.cpp
//
// Copyright 2026 The latrescore Authors
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

#include <cmath>
#include <numeric>

#include <catch2/catch_amalgamated.hpp>

#include "latrescore/lstm_train.hpp"
#include "oracles.hpp"

using namespace latrescore;

namespace {

Vocabulary counted_vocab(int n_words) {
  Vocabulary v;
  for (int i = 0; i < n_words; ++i) v.add("w" + std::to_string(i));
  // Counts descending over the real words; reserved tokens stay at zero, as
  // they would when counting an actual corpus.
  for (WordId w = Vocabulary::kNumReserved; w < v.size(); ++w) {
    v.count(w, 4 * (v.size() - w));
  }
  return v;
}

LstmLm tiny_model(int n_words, int layers, int d, std::uint64_t seed) {
  LstmConfig cfg;
  cfg.layers = layers;
  cfg.d_x = d;
  cfg.d_m = d;
  cfg.d_r = d;
  return LstmLm(counted_vocab(n_words), cfg, seed);
}

}  // namespace

TEST_CASE("log-uniform sampler: exhaustive case returns the complement") {
  const auto s = log_uniform_sample(10, 9, 4, 123);
  REQUIRE(s.size() == 9);
  for (std::int64_t k = 0, i = 0; k < 10; ++k) {
    if (k == 4) continue;
    CHECK(s[i++] == k);
  }
  CHECK_THROWS(log_uniform_sample(10, 10, 4, 123));
}

TEST_CASE("log-uniform sampler: deterministic given the seed") {
  const auto a = log_uniform_sample(100, 20, 7, 99);
  const auto b = log_uniform_sample(100, 20, 7, 99);
  CHECK(a == b);
  for (std::int64_t k : a) {
    CHECK(k != 7);
    CHECK(k >= 0);
    CHECK(k < 100);
  }
}

TEST_CASE("log-uniform draw frequencies match the closed form") {
  const std::int64_t V = 50;
  LogUniformSampler sampler(V);
  Rng rng(2024);
  const int N = 1000000;
  int hits = 0;
  for (int i = 0; i < N; ++i) {
    if (sampler.draw(rng) == 0) ++hits;
  }
  const double p = std::log(2.0) / std::log(static_cast<double>(V) + 1.0);
  const double sigma = std::sqrt(p * (1 - p) / N);
  CHECK(std::abs(static_cast<double>(hits) / N - p) < 3 * sigma);

  // The full pmf sums to one.
  double total = 0.0;
  for (std::int64_t k = 0; k < V; ++k) total += sampler.prob(k);
  CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("restricted softmax over the full vocabulary equals the full loss") {
  LstmLm m = tiny_model(9, 1, 4, 3);
  const int V = m.vocab().size();
  const WordId target = 5;
  std::vector<WordId> sample;
  for (WordId w = 0; w < V; ++w) {
    if (w != target) sample.push_back(w);
  }
  const std::vector<double> no_corr(sample.size(), 0.0);

  std::vector<std::vector<WordId>> inputs{{4}}, targets{{target}};
  const auto stats = sampled_softmax_loss(
      m, inputs, targets, {}, sample, no_corr, BatchState::zeros(m, 1),
      nullptr, nullptr);

  // Full-softmax cross entropy, computed independently.
  auto [next, r] = m.forward_step(m.start(), 4);
  Vec lp = m.full_softmax(r);
  CHECK(stats.loss == Catch::Approx(-lp[target]).epsilon(1e-12));
}

TEST_CASE("a sampled candidate equal to the target is masked out") {
  LstmLm m = tiny_model(9, 1, 4, 7);
  const WordId target = 5, other = 6;
  const std::vector<WordId> sample{other, target};  // collision on purpose
  const std::vector<double> no_corr(2, 0.0);
  std::vector<std::vector<WordId>> inputs{{4}}, targets{{target}};
  const auto stats =
      sampled_selfnorm_loss(m, inputs, targets, {}, sample, no_corr, 0.0,
                            BatchState::zeros(m, 1), nullptr, nullptr);

  auto [next, r] = m.forward_step(m.start(), 4);
  Vec u = m.logits(r);
  const double lse = log_add(u[target], u[other]);
  CHECK(stats.loss == Catch::Approx(lse - u[target]).epsilon(1e-12));
}

TEST_CASE("alpha=0 reduces the self-norm loss to the sampled softmax loss") {
  LstmLm m = tiny_model(12, 1, 4, 11);
  std::vector<std::vector<WordId>> inputs{{4, 6}, {7, 5}};
  std::vector<std::vector<WordId>> targets{{6, 7}, {5, 4}};
  const std::vector<WordId> sample{8, 9, 10};
  std::vector<double> corr{-0.3, -0.5, -0.9};
  std::vector<double> tcorr{-0.2, -0.4, -0.1, -0.6};

  ModelGrads g1, g2;
  g1.init_like(m);
  g2.init_like(m);
  const auto a = sampled_selfnorm_loss(m, inputs, targets, tcorr, sample, corr,
                                       0.0, BatchState::zeros(m, 2), nullptr,
                                       &g1);
  const auto b = sampled_softmax_loss(m, inputs, targets, tcorr, sample, corr,
                                      BatchState::zeros(m, 2), nullptr, &g2);
  CHECK(a.loss == b.loss);
  CHECK(a.penalty == 0.0);
  CHECK((g1.softmax_w - g2.softmax_w).norm() == 0.0);
  CHECK((g1.cells[0].W_xi - g2.cells[0].W_xi).norm() == 0.0);

  // With alpha > 0 the penalty is a square: always non-negative.
  const auto c = sampled_selfnorm_loss(m, inputs, targets, tcorr, sample, corr,
                                       0.01, BatchState::zeros(m, 2), nullptr,
                                       nullptr);
  CHECK(c.penalty >= 0.0);
  CHECK(c.loss == Catch::Approx(c.ce + c.penalty));
}

TEST_CASE("analytic gradients match central finite differences") {
  // d=4, |V|=12, one layer, float64, eps=1e-5, relative error < 1e-4.
  // Weights are drawn from a wide range so every gradient tensor is well
  // away from the finite-difference noise floor.
  std::vector<std::vector<WordId>> inputs{{4, 6}, {7, 5}, {5, 8}};
  std::vector<std::vector<WordId>> targets{{6, 7}, {5, 8}, {9, 4}};

  LogUniformSampler sampler(12);
  Rng rng(31);
  const auto ranks = sampler.sample(3, {}, rng);
  std::vector<double> corr(3), tcorr(6);

  for (double alpha : {0.0, 0.01}) {
    LstmConfig cfg;
    cfg.layers = 1;
    cfg.d_x = cfg.d_m = cfg.d_r = 4;
    cfg.init_range = 0.6;
    LstmLm m(counted_vocab(12), cfg, 13);
    const auto order = m.frequency_order();
    std::vector<WordId> sample;
    for (auto k : ranks) {
      sample.push_back(order[k]);
    }
    for (std::size_t j = 0; j < ranks.size(); ++j) {
      corr[j] = sampler.log_inclusion(ranks[j], 3);
    }
    for (std::size_t j = 0; j < tcorr.size(); ++j) {
      tcorr[j] = sampler.log_inclusion(2, 3);
    }
    const auto rep = oracles::finite_difference_check(
        m, inputs, targets, tcorr, sample, corr, alpha);
    INFO("alpha=" << alpha << " worst tensor: " << rep.worst_tensor);
    CHECK(rep.worst_rel < 1e-4);
  }
}

TEST_CASE("gradient clipping bounds the LSTM-weight norm at 1") {
  LstmLm m = tiny_model(8, 2, 3, 17);
  ModelGrads g;
  g.init_like(m);
  // Fill the cell gradients so the joint norm is exactly 5.
  double sq = 0.0;
  for (auto& c : g.cells) {
    c.W_xi.setConstant(0.4);
    c.W_rm.setConstant(-0.2);
    c.b_c.setConstant(0.1);
    sq += c.squared_norm();
  }
  const double scale_to5 = 5.0 / std::sqrt(sq);
  for (auto& c : g.cells) c.scale(scale_to5);
  g.embedding.setConstant(9.0);  // outside the clipped group
  CHECK(g.cell_norm() == Catch::Approx(5.0).epsilon(1e-12));
  g.clip_cells(1.0);
  CHECK(g.cell_norm() == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(g.embedding(0, 0) == 9.0);

  // No-op when already within the bound.
  g.clip_cells(1.0);
  CHECK(g.cell_norm() == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("training reduces the loss on a deterministic two-word corpus") {
  std::vector<WordId> corpus;
  for (int i = 0; i < 300; ++i) {
    corpus.push_back(4);
    corpus.push_back(5);
  }
  LstmLm m = tiny_model(8, 1, 4, 19);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.unroll = 10;
  // The perfectly symmetric corpus puts a saddle between the two contexts;
  // a hot rate and enough epochs step over it.
  cfg.max_epochs = 300;
  cfg.sample_size = 3;
  cfg.seed = 2;
  cfg.learning_rate = 1.0;
  const auto result = train_lstm(m, corpus, corpus, cfg);
  REQUIRE(result.epochs.size() == 300);
  CHECK(result.epochs.back().train_loss <
        0.5 * result.epochs.front().train_loss);
  CHECK(result.epochs.back().heldout_ppl < result.epochs.front().heldout_ppl);
  // The learned model is confident about the alternation.
  LMState s = m.advance(m.start(), 4);
  CHECK(m.score(s, 5).logprob > std::log(0.8));
}

TEST_CASE("training is bitwise deterministic given the seed") {
  std::vector<WordId> corpus;
  Rng rng(77);
  for (int i = 0; i < 600; ++i) {
    corpus.push_back(4 + static_cast<WordId>(rng.uniform_int(6)));
  }
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.unroll = 8;
  cfg.max_epochs = 2;
  cfg.sample_size = 3;
  cfg.seed = 5;

  LstmLm m1 = tiny_model(10, 1, 4, 23);
  LstmLm m2 = tiny_model(10, 1, 4, 23);
  const auto r1 = train_lstm(m1, corpus, corpus, cfg);
  const auto r2 = train_lstm(m2, corpus, corpus, cfg);
  for (std::size_t e = 0; e < r1.epochs.size(); ++e) {
    CHECK(r1.epochs[e].train_loss == r2.epochs[e].train_loss);
    CHECK(r1.epochs[e].heldout_ppl == r2.epochs[e].heldout_ppl);
  }
  CHECK((m1.softmax_w() - m2.softmax_w()).norm() == 0.0);
  CHECK((m1.embedding() - m2.embedding()).norm() == 0.0);
}

TEST_CASE("diverged training aborts with a report") {
  std::vector<WordId> corpus(100, 4);
  LstmLm m = tiny_model(8, 1, 4, 29);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.unroll = 5;
  cfg.max_epochs = 1;
  cfg.sample_size = 2;
  cfg.learning_rate = 1e300;  // guaranteed blow-up
  CHECK_THROWS_WITH(train_lstm(m, corpus, corpus, cfg),
                    Catch::Matchers::ContainsSubstring("diverged"));
}
