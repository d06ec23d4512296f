// latrescore/lstm_train.hpp
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

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <span>
#include <unordered_set>
#include <vector>

#include "latrescore/common.hpp"
#include "latrescore/lstm.hpp"

namespace latrescore {

// ---------------------------------------------------------------------------
// Log-uniform candidate sampling over frequency ranks.

/// Negative sampling distribution over ranks [0, range):
/// P(k) = ln((k+2)/(k+1)) / ln(range+1).  Rank 0 is the most frequent word.
class LogUniformSampler {
 public:
  explicit LogUniformSampler(std::int64_t range)
      : range_(range), log_range_(std::log(static_cast<double>(range) + 1.0)) {
    LR_CHECK(range >= 1, "log-uniform sampler: empty range");
  }

  std::int64_t range() const { return range_; }

  double prob(std::int64_t k) const {
    return std::log((static_cast<double>(k) + 2.0) /
                    (static_cast<double>(k) + 1.0)) /
           log_range_;
  }

  /// One draw by CDF inversion: CDF(k) = ln(k+2)/ln(range+1).
  std::int64_t draw(Rng& rng) const {
    const double u = rng.uniform();
    auto k = static_cast<std::int64_t>(std::exp(u * log_range_)) - 1;
    return std::clamp<std::int64_t>(k, 0, range_ - 1);
  }

  /// Probability that rank k appears in a sample of n distinct draws,
  /// approximated by n independent draws: 1 - (1 - q)^n.
  double log_inclusion(std::int64_t k, int n) const {
    const double q = prob(k);
    return std::log(-std::expm1(static_cast<double>(n) * std::log1p(-q)));
  }

  /// n distinct ranks, none of them in `exclude`.  Rejection sampling with a
  /// deterministic shuffle fallback for near-exhaustive requests.
  std::vector<std::int64_t> sample(int n, std::span<const std::int64_t> exclude,
                                   Rng& rng) const {
    std::unordered_set<std::int64_t> taboo(exclude.begin(), exclude.end());
    std::int64_t eligible = range_;
    for (std::int64_t e : exclude) {
      if (e >= 0 && e < range_) --eligible;
    }
    LR_CHECK(n <= eligible, "log-uniform sample: n=" << n << " exceeds the "
                            << eligible << " eligible ranks");
    std::vector<std::int64_t> out;
    out.reserve(n);
    if (n == eligible) {  // the only possible sample: everything eligible
      for (std::int64_t k = 0; k < range_; ++k) {
        if (!taboo.contains(k)) out.push_back(k);
      }
      return out;
    }
    std::unordered_set<std::int64_t> seen;
    long attempts = 0;
    const long cap = 200L * n + 1000;
    while (static_cast<int>(out.size()) < n && attempts < cap) {
      ++attempts;
      const std::int64_t k = draw(rng);
      if (taboo.contains(k) || !seen.insert(k).second) continue;
      out.push_back(k);
    }
    if (static_cast<int>(out.size()) < n) {
      // Pathological acceptance rate; finish with a partial Fisher-Yates
      // over the remaining eligible ranks.
      std::vector<std::int64_t> rest;
      for (std::int64_t k = 0; k < range_; ++k) {
        if (!taboo.contains(k) && !seen.contains(k)) rest.push_back(k);
      }
      while (static_cast<int>(out.size()) < n) {
        const auto pick = rng.uniform_int(static_cast<std::int64_t>(rest.size()));
        std::swap(rest[pick], rest.back());
        out.push_back(rest.back());
        rest.pop_back();
      }
    }
    return out;
  }

 private:
  std::int64_t range_;
  double log_range_;
};

/// n distinct ranks from [0, range) excluding one id.
inline std::vector<std::int64_t> log_uniform_sample(std::int64_t range, int n,
                                                    std::int64_t exclude,
                                                    std::uint64_t seed) {
  LogUniformSampler sampler(range);
  Rng rng(seed);
  const std::int64_t ex[] = {exclude};
  return sampler.sample(n, ex, rng);
}

// ---------------------------------------------------------------------------
// Gradients.

struct CellGrads {
  Mat W_xi, W_xo, W_xc, W_ri, W_ro, W_rc, W_rm;
  Vec D_wi, D_wo, b_i, b_o, b_c;

  void init_like(const LstmCellParams& p) {
    W_xi = Mat::Zero(p.d_m, p.d_x);
    W_xo = Mat::Zero(p.d_m, p.d_x);
    W_xc = Mat::Zero(p.d_m, p.d_x);
    W_ri = Mat::Zero(p.d_m, p.d_r);
    W_ro = Mat::Zero(p.d_m, p.d_r);
    W_rc = Mat::Zero(p.d_m, p.d_r);
    W_rm = Mat::Zero(p.d_r, p.d_m);
    D_wi = Vec::Zero(p.d_m);
    D_wo = Vec::Zero(p.d_m);
    b_i = Vec::Zero(p.d_m);
    b_o = Vec::Zero(p.d_m);
    b_c = Vec::Zero(p.d_m);
  }

  double squared_norm() const {
    return W_xi.squaredNorm() + W_xo.squaredNorm() + W_xc.squaredNorm() +
           W_ri.squaredNorm() + W_ro.squaredNorm() + W_rc.squaredNorm() +
           W_rm.squaredNorm() + D_wi.squaredNorm() + D_wo.squaredNorm() +
           b_i.squaredNorm() + b_o.squaredNorm() + b_c.squaredNorm();
  }

  void scale(double s) {
    W_xi *= s;
    W_xo *= s;
    W_xc *= s;
    W_ri *= s;
    W_ro *= s;
    W_rc *= s;
    W_rm *= s;
    D_wi *= s;
    D_wo *= s;
    b_i *= s;
    b_o *= s;
    b_c *= s;
  }
};

struct ModelGrads {
  Mat embedding;
  std::vector<CellGrads> cells;
  Mat softmax_w;
  Vec softmax_b;
  std::vector<WordId> emb_rows, softmax_rows;  // touched rows

  void init_like(const LstmLm& m) {
    embedding = Mat::Zero(m.embedding().rows(), m.embedding().cols());
    cells.resize(m.cells().size());
    for (std::size_t l = 0; l < cells.size(); ++l) {
      cells[l].init_like(m.cells()[l]);
    }
    softmax_w = Mat::Zero(m.softmax_w().rows(), m.softmax_w().cols());
    softmax_b = Vec::Zero(m.softmax_b().size());
  }

  void zero() {
    embedding.setZero();
    softmax_w.setZero();
    softmax_b.setZero();
    for (auto& c : cells) c.scale(0.0);
    emb_rows.clear();
    softmax_rows.clear();
  }

  /// Norm of the LSTM-cell gradients only (the group the clip applies to).
  double cell_norm() const {
    double sq = 0.0;
    for (const auto& c : cells) sq += c.squared_norm();
    return std::sqrt(sq);
  }

  void clip_cells(double max_norm) {
    const double norm = cell_norm();
    if (norm > max_norm) {
      const double s = max_norm / norm;
      for (auto& c : cells) c.scale(s);
    }
  }
};

/// Named views over every parameter tensor and its gradient slot, used by the
/// finite-difference checks.
struct TensorRef {
  std::string name;
  double* param;
  double* grad;
  Eigen::Index size;
};

inline std::vector<TensorRef> tensor_refs(LstmLm& m, ModelGrads& g) {
  std::vector<TensorRef> refs;
  auto add = [&](const std::string& name, Mat& p, Mat& gr) {
    refs.push_back({name, p.data(), gr.data(), p.size()});
  };
  auto addv = [&](const std::string& name, Vec& p, Vec& gr) {
    refs.push_back({name, p.data(), gr.data(), p.size()});
  };
  add("embedding", m.embedding(), g.embedding);
  for (std::size_t l = 0; l < m.cells().size(); ++l) {
    auto& c = m.cells()[l];
    auto& cg = g.cells[l];
    const std::string p = "cell" + std::to_string(l) + ".";
    add(p + "W_xi", c.W_xi, cg.W_xi);
    add(p + "W_xo", c.W_xo, cg.W_xo);
    add(p + "W_xc", c.W_xc, cg.W_xc);
    add(p + "W_ri", c.W_ri, cg.W_ri);
    add(p + "W_ro", c.W_ro, cg.W_ro);
    add(p + "W_rc", c.W_rc, cg.W_rc);
    add(p + "W_rm", c.W_rm, cg.W_rm);
    addv(p + "D_wi", c.D_wi, cg.D_wi);
    addv(p + "D_wo", c.D_wo, cg.D_wo);
    addv(p + "b_i", c.b_i, cg.b_i);
    addv(p + "b_o", c.b_o, cg.b_o);
    addv(p + "b_c", c.b_c, cg.b_c);
  }
  add("softmax_w", m.softmax_w(), g.softmax_w);
  addv("softmax_b", m.softmax_b(), g.softmax_b);
  return refs;
}

// ---------------------------------------------------------------------------
// Batched forward/backward over an unrolled window.

struct BatchState {
  std::vector<Mat> c;  // per layer: B x d_m
  std::vector<Mat> r;  // per layer: B x d_r

  static BatchState zeros(const LstmLm& m, int batch) {
    BatchState s;
    const auto& cfg = m.config();
    s.c.assign(m.cells().size(), Mat::Zero(batch, cfg.d_m));
    s.r.assign(m.cells().size(), Mat::Zero(batch, cfg.d_r));
    return s;
  }
};

struct BatchActs {
  Mat i, g, o, c, r;  // B x d_m (r: B x d_r)
};

struct ForwardCache {
  std::vector<Mat> x;                       // [T] embedded inputs, B x d_x
  std::vector<std::vector<BatchActs>> acts;  // [T][L]
  BatchState init;
  BatchState final_state;
};

/// Unrolled batched forward pass.  inputs[t][b] is the word consumed by
/// stream b at step t.
inline ForwardCache lstm_batch_forward(
    const LstmLm& m, const std::vector<std::vector<WordId>>& inputs,
    const BatchState& init) {
  const int T = static_cast<int>(inputs.size());
  LR_CHECK(T > 0, "batch forward: empty window");
  const int B = static_cast<int>(inputs[0].size());
  const int L = static_cast<int>(m.cells().size());

  ForwardCache f;
  f.init = init;
  f.x.resize(T);
  f.acts.assign(T, std::vector<BatchActs>(L));
  BatchState cur = init;
  for (int t = 0; t < T; ++t) {
    Mat x(B, m.config().d_x);
    for (int b = 0; b < B; ++b) x.row(b) = m.embed(inputs[t][b]).transpose();
    f.x[t] = x;
    Mat in = std::move(x);
    for (int l = 0; l < L; ++l) {
      const auto& p = m.cells()[l];
      BatchActs& a = f.acts[t][l];
      Mat ai = in * p.W_xi.transpose() + cur.r[l] * p.W_ri.transpose();
      ai.array() += cur.c[l].array().rowwise() * p.D_wi.transpose().array();
      ai.array().rowwise() += p.b_i.transpose().array();
      Mat ao = in * p.W_xo.transpose() + cur.r[l] * p.W_ro.transpose();
      ao.array() += cur.c[l].array().rowwise() * p.D_wo.transpose().array();
      ao.array().rowwise() += p.b_o.transpose().array();
      Mat ag = in * p.W_xc.transpose() + cur.r[l] * p.W_rc.transpose();
      ag.array().rowwise() += p.b_c.transpose().array();

      a.i = ai.unaryExpr([](double v) { return sigmoid(v); });
      a.o = ao.unaryExpr([](double v) { return sigmoid(v); });
      a.g = ag.array().tanh();
      a.c = cur.c[l].cwiseProduct(Mat::Ones(B, p.d_m) - a.i) +
            a.i.cwiseProduct(a.g);
      const Mat mgate = a.c.array().tanh() * a.o.array();
      a.r = mgate * p.W_rm.transpose();

      cur.c[l] = a.c;
      cur.r[l] = a.r;
      in = a.r;
    }
  }
  f.final_state = std::move(cur);
  return f;
}

struct LossStats {
  double loss = 0.0;       // ce + penalty, summed over tokens
  double ce = 0.0;
  double penalty = 0.0;
  long tokens = 0;
};

/// Sampled-softmax cross entropy with the self-normalization penalty
/// alpha * log^2(sum over the candidate set), both computed on the corrected
/// candidate logits.  Candidates are the shared sample plus each position's
/// target; a sampled candidate equal to the row's target is masked out of
/// that row.  With alpha = 0 this is exactly the sampled softmax loss.
/// Corrections (log inclusion probabilities) are subtracted from the logits
/// so the restricted softmax estimates the full one; passing zeros disables
/// the correction.
///
/// Fills `grads` (accumulating) when non-null and returns summed statistics.
inline LossStats sampled_selfnorm_loss(
    const LstmLm& m, const std::vector<std::vector<WordId>>& inputs,
    const std::vector<std::vector<WordId>>& targets,
    std::span<const double> target_log_inclusion,  // [t*B + b], or empty
    std::span<const WordId> sample_ids,
    std::span<const double> sample_log_inclusion, double alpha,
    const BatchState& init, BatchState* final_state, ModelGrads* grads) {
  const int T = static_cast<int>(inputs.size());
  const int B = static_cast<int>(inputs[0].size());
  const int L = static_cast<int>(m.cells().size());
  const int n = static_cast<int>(sample_ids.size());
  const int d_r = m.config().d_r;
  LR_CHECK(static_cast<int>(targets.size()) == T, "loss: shape mismatch");
  LR_CHECK(sample_log_inclusion.size() == sample_ids.size(),
           "loss: sample corrections mismatch");
  LR_CHECK(target_log_inclusion.empty() ||
               target_log_inclusion.size() == static_cast<std::size_t>(T) * B,
           "loss: target corrections mismatch");

  ForwardCache f = lstm_batch_forward(m, inputs, init);
  if (final_state != nullptr) *final_state = f.final_state;

  // Gather sampled softmax rows once.
  Mat w_s(n, d_r);
  Vec b_s(n);
  for (int j = 0; j < n; ++j) {
    w_s.row(j) = m.softmax_w().row(sample_ids[j]);
    b_s[j] = m.softmax_b()[sample_ids[j]];
  }

  LossStats stats;
  std::vector<Mat> d_rtop(T, Mat::Zero(B, d_r));

  for (int t = 0; t < T; ++t) {
    const Mat& rtop = f.acts[t][L - 1].r;  // B x d_r
    Mat z = rtop * w_s.transpose();        // B x n
    z.array().rowwise() += b_s.transpose().array();
    for (int j = 0; j < n; ++j) z.col(j).array() -= sample_log_inclusion[j];

    for (int b = 0; b < B; ++b) {
      const WordId tgt = targets[t][b];
      double u = m.softmax_w().row(tgt).dot(rtop.row(b)) + m.softmax_b()[tgt];
      if (!target_log_inclusion.empty()) {
        u -= target_log_inclusion[static_cast<std::size_t>(t) * B + b];
      }
      // Row-local view of the candidate logits with target collisions masked.
      double hi = u;
      for (int j = 0; j < n; ++j) {
        if (sample_ids[j] != tgt) hi = std::max(hi, z(b, j));
      }
      double acc = std::exp(u - hi);
      for (int j = 0; j < n; ++j) {
        if (sample_ids[j] != tgt) acc += std::exp(z(b, j) - hi);
      }
      const double lse = hi + std::log(acc);
      const double ce = lse - u;
      stats.ce += ce;
      stats.penalty += alpha * lse * lse;
      stats.tokens += 1;

      if (grads == nullptr) continue;
      const double pen_coeff = 2.0 * alpha * lse;
      const double p_tgt = std::exp(u - lse);
      const double dz_tgt = (p_tgt - 1.0) + pen_coeff * p_tgt;
      grads->softmax_w.row(tgt) += dz_tgt * rtop.row(b);
      grads->softmax_b[tgt] += dz_tgt;
      grads->softmax_rows.push_back(tgt);
      d_rtop[t].row(b) += dz_tgt * m.softmax_w().row(tgt);
      for (int j = 0; j < n; ++j) {
        if (sample_ids[j] == tgt) continue;
        const double p = std::exp(z(b, j) - lse);
        const double dz = p + pen_coeff * p;
        grads->softmax_w.row(sample_ids[j]) += dz * rtop.row(b);
        grads->softmax_b[sample_ids[j]] += dz;
        d_rtop[t].row(b) += dz * w_s.row(j);
      }
    }
  }
  stats.loss = stats.ce + stats.penalty;
  LR_CHECK(std::isfinite(stats.loss), "training loss diverged (non-finite)");

  if (grads == nullptr) return stats;
  for (WordId s : sample_ids) grads->softmax_rows.push_back(s);

  // Backward through time and layers.
  std::vector<Mat> dC(L), dRcarry(L);
  for (int l = 0; l < L; ++l) {
    dC[l] = Mat::Zero(B, m.config().d_m);
    dRcarry[l] = Mat::Zero(B, d_r);
  }
  for (int t = T - 1; t >= 0; --t) {
    Mat d_above = std::move(d_rtop[t]);
    for (int l = L - 1; l >= 0; --l) {
      const auto& p = m.cells()[l];
      auto& cg = grads->cells[l];
      const BatchActs& a = f.acts[t][l];
      const Mat& x_in = l == 0 ? f.x[t] : f.acts[t][l - 1].r;
      const Mat& c_prev = t == 0 ? f.init.c[l] : f.acts[t - 1][l].c;
      const Mat& r_prev = t == 0 ? f.init.r[l] : f.acts[t - 1][l].r;

      const Mat dR = d_above + dRcarry[l];
      const Mat tanh_c = a.c.array().tanh();
      const Mat mgate = tanh_c.cwiseProduct(a.o);
      const Mat dm = dR * p.W_rm;
      cg.W_rm += dR.transpose() * mgate;

      const Mat do_ = dm.cwiseProduct(tanh_c);
      Mat dc = dC[l] +
               dm.cwiseProduct(a.o).cwiseProduct(
                   (1.0 - tanh_c.array().square()).matrix());
      const Mat da_o = do_.cwiseProduct(a.o)
                           .cwiseProduct((1.0 - a.o.array()).matrix());
      const Mat di = dc.cwiseProduct(a.g - c_prev);
      const Mat dg = dc.cwiseProduct(a.i);
      const Mat da_i = di.cwiseProduct(a.i)
                           .cwiseProduct((1.0 - a.i.array()).matrix());
      const Mat da_g = dg.cwiseProduct((1.0 - a.g.array().square()).matrix());

      cg.W_xi += da_i.transpose() * x_in;
      cg.W_ri += da_i.transpose() * r_prev;
      cg.D_wi += da_i.cwiseProduct(c_prev).colwise().sum().transpose();
      cg.b_i += da_i.colwise().sum().transpose();
      cg.W_xo += da_o.transpose() * x_in;
      cg.W_ro += da_o.transpose() * r_prev;
      cg.D_wo += da_o.cwiseProduct(c_prev).colwise().sum().transpose();
      cg.b_o += da_o.colwise().sum().transpose();
      cg.W_xc += da_g.transpose() * x_in;
      cg.W_rc += da_g.transpose() * r_prev;
      cg.b_c += da_g.colwise().sum().transpose();

      dRcarry[l] = da_i * p.W_ri + da_o * p.W_ro + da_g * p.W_rc;
      dC[l] = dc.cwiseProduct((1.0 - a.i.array()).matrix());
      dC[l].array() += da_i.array().rowwise() * p.D_wi.transpose().array();
      dC[l].array() += da_o.array().rowwise() * p.D_wo.transpose().array();

      const Mat dx = da_i * p.W_xi + da_o * p.W_xo + da_g * p.W_xc;
      if (l > 0) {
        d_above = dx;
      } else {
        for (int b = 0; b < B; ++b) {
          grads->embedding.row(inputs[t][b]) += dx.row(b);
          grads->emb_rows.push_back(inputs[t][b]);
        }
      }
    }
  }
  auto dedupe = [](std::vector<WordId>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe(grads->emb_rows);
  dedupe(grads->softmax_rows);
  return stats;
}

/// Plain sampled softmax: the self-normalized loss at alpha = 0.
inline LossStats sampled_softmax_loss(
    const LstmLm& m, const std::vector<std::vector<WordId>>& inputs,
    const std::vector<std::vector<WordId>>& targets,
    std::span<const double> target_log_inclusion,
    std::span<const WordId> sample_ids,
    std::span<const double> sample_log_inclusion, const BatchState& init,
    BatchState* final_state, ModelGrads* grads) {
  return sampled_selfnorm_loss(m, inputs, targets, target_log_inclusion,
                               sample_ids, sample_log_inclusion, 0.0, init,
                               final_state, grads);
}

// ---------------------------------------------------------------------------
// AdaGrad trainer with truncated backpropagation through time.

struct TrainConfig {
  double learning_rate = 0.2;
  int unroll = 20;
  int batch_size = 128;
  double clip_norm = 1.0;       // applies to the LSTM cell gradients
  int sample_size = 0;          // 0: 5% of |V|
  double alpha = 0.0;           // self-normalization penalty weight
  int max_epochs = 5;
  std::uint64_t seed = 1;
  double adagrad_init = 0.1;    // initial squared-gradient accumulator
  int heldout_cap = 20000;      // tokens scored for per-epoch perplexity
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;  // per token
  double train_ce = 0.0;
  double heldout_ppl = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
};

class LstmTrainer {
 public:
  LstmTrainer(LstmLm& model, const TrainConfig& cfg)
      : model_(model), cfg_(cfg), rng_(cfg.seed) {
    accum_.init_like(model);
    const double a0 = cfg.adagrad_init;
    accum_.embedding.array() += a0;
    accum_.softmax_w.array() += a0;
    accum_.softmax_b.array() += a0;
    for (auto& c : accum_.cells) {
      c.W_xi.array() += a0;
      c.W_xo.array() += a0;
      c.W_xc.array() += a0;
      c.W_ri.array() += a0;
      c.W_ro.array() += a0;
      c.W_rc.array() += a0;
      c.W_rm.array() += a0;
      c.D_wi.array() += a0;
      c.D_wo.array() += a0;
      c.b_i.array() += a0;
      c.b_o.array() += a0;
      c.b_c.array() += a0;
    }
    rank_of_.assign(model.vocab().size(), 0);
    const auto order = model.frequency_order();
    for (std::size_t r = 0; r < order.size(); ++r) rank_of_[order[r]] = r;
  }

  TrainResult run(std::span<const WordId> train,
                  std::span<const WordId> heldout) {
    LR_CHECK(train.size() >= 2, "train: corpus too small");
    const int V = model_.vocab().size();
    int n = cfg_.sample_size > 0
                ? cfg_.sample_size
                : std::max(2, static_cast<int>(std::lround(0.05 * V)));
    n = std::min(n, V - 1);
    LogUniformSampler sampler(V);

    // Carve the corpus into batch_size parallel streams.
    int B = cfg_.batch_size;
    int T = cfg_.unroll;
    while (B > 1 &&
           static_cast<long>(train.size()) / B < static_cast<long>(T) + 1) {
      B /= 2;
    }
    const long stream_len = static_cast<long>(train.size()) / B;
    T = std::min<long>(T, stream_len - 1);
    LR_CHECK(T >= 1, "train: corpus shorter than one step");
    const long windows = (stream_len - 1) / T;

    TrainResult result;
    ModelGrads grads;
    grads.init_like(model_);
    std::vector<std::vector<WordId>> inputs(T, std::vector<WordId>(B));
    std::vector<std::vector<WordId>> targets(T, std::vector<WordId>(B));
    std::vector<double> tgt_loginc(static_cast<std::size_t>(T) * B);

    for (int epoch = 1; epoch <= cfg_.max_epochs; ++epoch) {
      const auto t0 = std::chrono::steady_clock::now();
      BatchState state = BatchState::zeros(model_, B);
      double loss_sum = 0.0, ce_sum = 0.0;
      long tokens = 0;

      for (long w = 0; w < windows; ++w) {
        for (int t = 0; t < T; ++t) {
          for (int b = 0; b < B; ++b) {
            const long pos = static_cast<long>(b) * stream_len + w * T + t;
            inputs[t][b] = train[pos];
            targets[t][b] = train[pos + 1];
          }
        }
        const auto ranks = sampler.sample(n, {}, rng_);
        std::vector<WordId> sample_ids(n);
        std::vector<double> sample_loginc(n);
        const auto order = model_.frequency_order();
        for (int j = 0; j < n; ++j) {
          sample_ids[j] = order[ranks[j]];
          sample_loginc[j] = sampler.log_inclusion(ranks[j], n);
        }
        for (int t = 0; t < T; ++t) {
          for (int b = 0; b < B; ++b) {
            tgt_loginc[static_cast<std::size_t>(t) * B + b] =
                sampler.log_inclusion(rank_of_[targets[t][b]], n);
          }
        }

        zero_grads(grads);
        BatchState next;
        const LossStats stats = sampled_selfnorm_loss(
            model_, inputs, targets, tgt_loginc, sample_ids, sample_loginc,
            cfg_.alpha, state, &next, &grads);
        state = std::move(next);
        loss_sum += stats.loss;
        ce_sum += stats.ce;
        tokens += stats.tokens;

        const double inv = 1.0 / static_cast<double>(stats.tokens);
        scale_grads(grads, inv);
        grads.clip_cells(cfg_.clip_norm);
        apply_adagrad(grads);
      }

      EpochMetrics em;
      em.epoch = epoch;
      em.train_loss = loss_sum / static_cast<double>(tokens);
      em.train_ce = ce_sum / static_cast<double>(tokens);
      if (!heldout.empty()) {
        const auto cap = std::min<std::size_t>(
            heldout.size(), static_cast<std::size_t>(cfg_.heldout_cap));
        em.heldout_ppl = perplexity(model_, heldout.subspan(0, cap));
      }
      em.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
      result.epochs.push_back(em);
    }
    model_.set_self_normalized(cfg_.alpha > 0.0, cfg_.alpha);
    return result;
  }

 private:
  void zero_grads(ModelGrads& g) {
    for (WordId r : g.emb_rows) g.embedding.row(r).setZero();
    for (WordId r : g.softmax_rows) {
      g.softmax_w.row(r).setZero();
      g.softmax_b[r] = 0.0;
    }
    g.emb_rows.clear();
    g.softmax_rows.clear();
    for (auto& c : g.cells) c.scale(0.0);
  }

  void scale_grads(ModelGrads& g, double s) {
    for (WordId r : g.emb_rows) g.embedding.row(r) *= s;
    for (WordId r : g.softmax_rows) {
      g.softmax_w.row(r) *= s;
      g.softmax_b[r] *= s;
    }
    for (auto& c : g.cells) c.scale(s);
  }

  void apply_adagrad(const ModelGrads& g) {
    const double lr = cfg_.learning_rate;
    auto upd = [lr](Mat& p, Mat& acc, const Mat& gr) {
      acc.array() += gr.array().square();
      p.array() -= lr * gr.array() / acc.array().sqrt();
    };
    auto updv = [lr](Vec& p, Vec& acc, const Vec& gr) {
      acc.array() += gr.array().square();
      p.array() -= lr * gr.array() / acc.array().sqrt();
    };
    for (WordId r : g.emb_rows) {
      accum_.embedding.row(r).array() += g.embedding.row(r).array().square();
      model_.embedding().row(r).array() -=
          lr * g.embedding.row(r).array() /
          accum_.embedding.row(r).array().sqrt();
    }
    for (WordId r : g.softmax_rows) {
      accum_.softmax_w.row(r).array() += g.softmax_w.row(r).array().square();
      model_.softmax_w().row(r).array() -=
          lr * g.softmax_w.row(r).array() /
          accum_.softmax_w.row(r).array().sqrt();
      accum_.softmax_b[r] += g.softmax_b[r] * g.softmax_b[r];
      model_.softmax_b()[r] -= lr * g.softmax_b[r] /
                               std::sqrt(accum_.softmax_b[r]);
    }
    for (std::size_t l = 0; l < g.cells.size(); ++l) {
      auto& p = model_.cells()[l];
      auto& a = accum_.cells[l];
      const auto& gr = g.cells[l];
      upd(p.W_xi, a.W_xi, gr.W_xi);
      upd(p.W_xo, a.W_xo, gr.W_xo);
      upd(p.W_xc, a.W_xc, gr.W_xc);
      upd(p.W_ri, a.W_ri, gr.W_ri);
      upd(p.W_ro, a.W_ro, gr.W_ro);
      upd(p.W_rc, a.W_rc, gr.W_rc);
      upd(p.W_rm, a.W_rm, gr.W_rm);
      updv(p.D_wi, a.D_wi, gr.D_wi);
      updv(p.D_wo, a.D_wo, gr.D_wo);
      updv(p.b_i, a.b_i, gr.b_i);
      updv(p.b_o, a.b_o, gr.b_o);
      updv(p.b_c, a.b_c, gr.b_c);
    }
  }

  LstmLm& model_;
  TrainConfig cfg_;
  Rng rng_;
  ModelGrads accum_;
  std::vector<std::size_t> rank_of_;
};

/// train(): fits the model on the stream and reports per-epoch metrics.
inline TrainResult train_lstm(LstmLm& model, std::span<const WordId> train,
                              std::span<const WordId> heldout,
                              const TrainConfig& cfg) {
  LstmTrainer trainer(model, cfg);
  return trainer.run(train, heldout);
}

}  // namespace latrescore
