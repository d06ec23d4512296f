// latrescore/lstm.hpp
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

#include <Eigen/Dense>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "latrescore/common.hpp"
#include "latrescore/lm.hpp"
#include "latrescore/pq.hpp"
#include "latrescore/vocab.hpp"

namespace latrescore {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One LSTM layer: coupled input/forget gates, peephole connections from
/// c_{t-1} into both gates, and a recurrent projection r = W_rm m.  There is
/// no separate forget-gate parameter set; f is defined as 1 - i.
struct LstmCellParams {
  int d_x = 0, d_m = 0, d_r = 0;
  Mat W_xi, W_xo, W_xc;  // d_m x d_x
  Mat W_ri, W_ro, W_rc;  // d_m x d_r
  Vec D_wi, D_wo;        // d_m, diagonal peepholes on c_{t-1}
  Vec b_i, b_o, b_c;     // d_m
  Mat W_rm;              // d_r x d_m

  void init(int dx, int dm, int dr, double range, Rng& rng) {
    d_x = dx;
    d_m = dm;
    d_r = dr;
    auto fill = [&](Mat& m, int r, int c) {
      m.resize(r, c);
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) m(i, j) = (rng.uniform() * 2 - 1) * range;
      }
    };
    auto fillv = [&](Vec& v, int n) {
      v.resize(n);
      for (int i = 0; i < n; ++i) v[i] = (rng.uniform() * 2 - 1) * range;
    };
    fill(W_xi, dm, dx);
    fill(W_xo, dm, dx);
    fill(W_xc, dm, dx);
    fill(W_ri, dm, dr);
    fill(W_ro, dm, dr);
    fill(W_rc, dm, dr);
    fillv(D_wi, dm);
    fillv(D_wo, dm);
    fillv(b_i, dm);
    fillv(b_o, dm);
    fillv(b_c, dm);
    fill(W_rm, dr, dm);
  }

  std::size_t num_params() const {
    return static_cast<std::size_t>(3 * d_m * d_x + 3 * d_m * d_r + 5 * d_m +
                                    d_r * d_m);
  }
};

struct CellState {
  Vec c;  // d_m
  Vec r;  // d_r
};

struct CellGates {
  Vec i, f, g, o;  // gate activations and tanh candidate
};

/// Single-step cell evaluation.  Optionally reports the gate activations.
inline CellState cell_forward(const LstmCellParams& p, const Vec& x,
                              const CellState& prev,
                              CellGates* gates = nullptr) {
  LR_CHECK(x.size() == p.d_x && prev.c.size() == p.d_m &&
               prev.r.size() == p.d_r,
           "cell_forward: shape mismatch");
  const Vec ai = p.W_xi * x + p.W_ri * prev.r + p.D_wi.cwiseProduct(prev.c) +
                 p.b_i;
  const Vec ao = p.W_xo * x + p.W_ro * prev.r + p.D_wo.cwiseProduct(prev.c) +
                 p.b_o;
  const Vec ag = p.W_xc * x + p.W_rc * prev.r + p.b_c;
  const Vec i = ai.unaryExpr([](double v) { return sigmoid(v); });
  const Vec o = ao.unaryExpr([](double v) { return sigmoid(v); });
  const Vec g = ag.array().tanh();
  const Vec f = Vec::Ones(p.d_m) - i;  // coupled gates
  CellState out;
  out.c = prev.c.cwiseProduct(f) + i.cwiseProduct(g);
  const Vec m = out.c.array().tanh() * o.array();
  out.r = p.W_rm * m;
  if (gates != nullptr) {
    gates->i = i;
    gates->f = f;
    gates->g = g;
    gates->o = o;
  }
  return out;
}

namespace detail {

struct LstmStateData final : LMStateData {
  std::vector<CellState> layers;

  // Lazily cached log normalizer of the softmax at this state; NaN until
  // computed.  Races are benign: every writer stores the same value.
  mutable std::atomic<double> cached_lse{
      std::numeric_limits<double>::quiet_NaN()};

  std::uint64_t fingerprint() const override {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const Vec& v) {
      for (Eigen::Index k = 0; k < v.size(); ++k) {
        h ^= std::bit_cast<std::uint64_t>(v[k]);
        h *= 0x100000001b3ULL;
      }
    };
    for (const auto& l : layers) {
      mix(l.c);
      mix(l.r);
    }
    return h;
  }
};

// little-endian binary io helpers
static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

inline void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
inline void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
inline void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
inline std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
inline double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
inline std::string get_string(std::istream& is) {
  std::string s(get_u32(is), '\0');
  is.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}

/// Tensors are stored row-major as 32-bit floats.
inline void put_matrix(std::ostream& os, const Mat& m) {
  put_u32(os, static_cast<std::uint32_t>(m.rows()));
  put_u32(os, static_cast<std::uint32_t>(m.cols()));
  std::vector<float> buf(static_cast<std::size_t>(m.rows()) * m.cols());
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      buf[k++] = static_cast<float>(m(i, j));
    }
  }
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * 4));
}
inline Mat get_matrix(std::istream& is) {
  const auto rows = get_u32(is), cols = get_u32(is);
  std::vector<float> buf(static_cast<std::size_t>(rows) * cols);
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * 4));
  Mat m(rows, cols);
  std::size_t k = 0;
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = buf[k++];
  }
  return m;
}
inline void put_vector(std::ostream& os, const Vec& v) {
  put_matrix(os, Mat(v.transpose()));
}
inline Vec get_vector(std::istream& is) {
  Mat m = get_matrix(is);
  return Vec(m.transpose());
}

inline void put_codebook(std::ostream& os, const PQCodebook& cb) {
  put_u32(os, static_cast<std::uint32_t>(cb.rows));
  put_u32(os, static_cast<std::uint32_t>(cb.dim));
  put_u32(os, static_cast<std::uint32_t>(cb.chunk_size));
  put_u32(os, static_cast<std::uint32_t>(cb.centers_requested));
  for (const Mat& c : cb.centers) put_matrix(os, c);
  os.write(reinterpret_cast<const char*>(cb.codes.data()),
           static_cast<std::streamsize>(cb.codes.size()));
}
inline PQCodebook get_codebook(std::istream& is) {
  PQCodebook cb;
  cb.rows = static_cast<int>(get_u32(is));
  cb.dim = static_cast<int>(get_u32(is));
  cb.chunk_size = static_cast<int>(get_u32(is));
  cb.centers_requested = static_cast<int>(get_u32(is));
  cb.num_chunks = (cb.dim + cb.chunk_size - 1) / cb.chunk_size;
  cb.centers.resize(cb.num_chunks);
  for (Mat& c : cb.centers) c = get_matrix(is);
  cb.codes.resize(static_cast<std::size_t>(cb.rows) * cb.num_chunks);
  is.read(reinterpret_cast<char*>(cb.codes.data()),
          static_cast<std::streamsize>(cb.codes.size()));
  return cb;
}

}  // namespace detail

struct LstmConfig {
  int layers = 2;
  int d_x = 64;
  int d_m = 256;
  int d_r = 128;
  double init_range = 0.05;
};

/// LSTM language model: embedding, stacked projected LSTM layers, softmax.
/// When trained with the self-normalization penalty the softmax normalizer
/// stays close to 1 and scoring can skip it (set_selfnorm_scoring).
class LstmLm : public LanguageModel {
 public:
  LstmLm() = default;

  LstmLm(Vocabulary vocab, const LstmConfig& cfg, std::uint64_t seed)
      : vocab_(std::move(vocab)), cfg_(cfg) {
    Rng rng(seed);
    const WordId V = vocab_.size();
    embedding_.resize(V, cfg.d_x);
    for (WordId i = 0; i < V; ++i) {
      for (int j = 0; j < cfg.d_x; ++j) {
        embedding_(i, j) = (rng.uniform() * 2 - 1) * cfg.init_range;
      }
    }
    cells_.resize(cfg.layers);
    for (int l = 0; l < cfg.layers; ++l) {
      cells_[l].init(l == 0 ? cfg.d_x : cfg.d_r, cfg.d_m, cfg.d_r,
                     cfg.init_range, rng);
    }
    softmax_w_.resize(V, cfg.d_r);
    for (WordId i = 0; i < V; ++i) {
      for (int j = 0; j < cfg.d_r; ++j) {
        softmax_w_(i, j) = (rng.uniform() * 2 - 1) * cfg.init_range;
      }
    }
    softmax_b_ = Vec::Zero(V);
    refresh_frequency_order();
  }

  const Vocabulary& vocab() const override { return vocab_; }
  const LstmConfig& config() const { return cfg_; }

  // mutable model internals, used by the trainer and the quantizer
  Mat& embedding() { return embedding_; }
  const Mat& embedding() const { return embedding_; }
  std::vector<LstmCellParams>& cells() { return cells_; }
  const std::vector<LstmCellParams>& cells() const { return cells_; }
  Mat& softmax_w() { return softmax_w_; }
  const Mat& softmax_w() const { return softmax_w_; }
  Vec& softmax_b() { return softmax_b_; }
  const Vec& softmax_b() const { return softmax_b_; }
  Vocabulary& mutable_vocab() { return vocab_; }

  bool self_normalized() const { return self_normalized_; }
  double alpha() const { return alpha_; }
  void set_self_normalized(bool flag, double alpha) {
    self_normalized_ = flag;
    alpha_ = alpha;
  }

  /// Switches the generic score()/logprob() path to unnormalized logits.
  /// Only valid for models trained with the self-normalization penalty.
  void set_selfnorm_scoring(bool on) {
    LR_CHECK(!on || self_normalized_,
             "self-normalized scoring requested on a model trained without "
             "the normalizer penalty");
    selfnorm_scoring_ = on;
  }
  bool selfnorm_scoring() const { return selfnorm_scoring_; }

  const std::optional<PQCodebook>& pq_embedding() const {
    return pq_embedding_;
  }
  const std::optional<PQCodebook>& pq_softmax() const { return pq_softmax_; }
  void set_pq(PQCodebook emb, PQCodebook sm) {
    pq_embedding_ = std::move(emb);
    pq_softmax_ = std::move(sm);
  }
  bool quantized() const { return pq_softmax_.has_value(); }

  /// Frequency rank r -> word id (rank 0 = most frequent).
  std::span<const WordId> frequency_order() const { return freq_order_; }
  void refresh_frequency_order() { freq_order_ = vocab_.ids_by_frequency(); }
  void set_frequency_order(std::vector<WordId> order) {
    freq_order_ = std::move(order);
  }

  Vec embed(WordId w) const {
    return pq_embedding_ ? pq_embedding_->reconstruct_row(w)
                         : Vec(embedding_.row(w));
  }

  // --- LanguageModel interface -------------------------------------------

  LMState start() const override {
    auto d = std::make_shared<detail::LstmStateData>();
    d->layers.resize(cells_.size());
    for (std::size_t l = 0; l < cells_.size(); ++l) {
      d->layers[l].c = Vec::Zero(cfg_.d_m);
      d->layers[l].r = Vec::Zero(cfg_.d_r);
    }
    return LMState(std::move(d));
  }

  LMScoreResult score(const LMState& state, WordId word) const override {
    LR_CHECK(word >= 0 && word < vocab_.size(),
             "lstm score: unknown word id " << word);
    LMScoreResult res;
    res.logprob = logprob(state, word);
    res.next_state = advance(state, word);
    return res;
  }

  double logprob(const LMState& state, WordId word) const override {
    const auto& s = state.as<detail::LstmStateData>();
    const Vec& r = s.layers.back().r;
    const double u = pq_softmax_ ? pq_softmax_->logit(word, r, softmax_b_[word])
                                 : softmax_w_.row(word).dot(r) + softmax_b_[word];
    return selfnorm_scoring_ ? u : u - state_lse(s);
  }

  LMScoreResult score_unk(const LMState& state) const override {
    LR_CHECK(vocab_.n_unk() >= 1, "score_unk: N_UNK is zero");
    LMScoreResult r = score(state, Vocabulary::kUnk);
    r.logprob -= std::log(static_cast<double>(vocab_.n_unk()));
    return r;
  }

  /// Unnormalized scoring: log p = U(word, h).  Requires the model to carry
  /// the self-normalization flag, independent of set_selfnorm_scoring().
  LMScoreResult score_selfnorm(const LMState& state, WordId word) const {
    LR_CHECK(self_normalized_,
             "score_selfnorm on a model trained without self-normalization");
    const auto& s = state.as<detail::LstmStateData>();
    const Vec& r = s.layers.back().r;
    LMScoreResult res;
    res.logprob = pq_softmax_ ? pq_softmax_->logit(word, r, softmax_b_[word])
                              : softmax_w_.row(word).dot(r) + softmax_b_[word];
    res.next_state = advance(state, word);
    return res;
  }

  /// Weighted state average over both c and r, all layers, same weights.
  LMState pool_states(std::span<const LMState> states,
                      std::span<const double> weights) const override {
    LR_CHECK(!states.empty() && states.size() == weights.size(),
             "pool_states: bad arguments");
    double total = 0.0;
    for (double w : weights) {
      LR_CHECK(w >= 0.0, "pool_states: negative weight");
      total += w;
    }
    LR_CHECK(total > 0.0, "pool_states: zero total weight");
    auto d = std::make_shared<detail::LstmStateData>();
    d->layers.resize(cells_.size());
    for (std::size_t l = 0; l < cells_.size(); ++l) {
      d->layers[l].c = Vec::Zero(cfg_.d_m);
      d->layers[l].r = Vec::Zero(cfg_.d_r);
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto& s = states[i].as<detail::LstmStateData>();
      const double w = weights[i] / total;
      for (std::size_t l = 0; l < cells_.size(); ++l) {
        d->layers[l].c += w * s.layers[l].c;
        d->layers[l].r += w * s.layers[l].r;
      }
    }
    return LMState(std::move(d));
  }

  std::size_t num_params() const override {
    std::size_t n = static_cast<std::size_t>(embedding_.rows()) *
                    embedding_.cols();
    for (const auto& c : cells_) n += c.num_params();
    n += static_cast<std::size_t>(softmax_w_.rows()) * softmax_w_.cols();
    n += static_cast<std::size_t>(softmax_b_.size());
    return n;
  }

  std::string name() const override { return "lstm"; }

  // --- model-specific operations ------------------------------------------

  /// Runs one word through all layers; returns the advanced state.
  LMState advance(const LMState& state, WordId word) const {
    const auto& s = state.as<detail::LstmStateData>();
    auto d = std::make_shared<detail::LstmStateData>();
    d->layers.resize(cells_.size());
    Vec x = embed(word);
    for (std::size_t l = 0; l < cells_.size(); ++l) {
      d->layers[l] = cell_forward(cells_[l], x, s.layers[l]);
      x = d->layers[l].r;
    }
    return LMState(std::move(d));
  }

  /// advance() plus the final-layer output feeding the softmax.
  std::pair<LMState, Vec> forward_step(const LMState& state,
                                       WordId word) const {
    LMState next = advance(state, word);
    Vec r = next.as<detail::LstmStateData>().layers.back().r;
    return {std::move(next), std::move(r)};
  }

  /// Raw logits U(w, h) for a final-layer output r.
  Vec logits(const Vec& r) const {
    return pq_softmax_ ? pq_softmax_->logits(r, softmax_b_)
                       : Vec(softmax_w_ * r + softmax_b_);
  }

  /// Normalized log distribution over the vocabulary.
  Vec full_softmax(const Vec& r) const {
    Vec u = logits(r);
    const double lse = log_sum_exp(std::span<const double>(u.data(), u.size()));
    return u.array() - lse;
  }

  /// ln Z(h) at a state: log of the full softmax normalizer.
  double log_normalizer(const LMState& state) const {
    return state_lse(state.as<detail::LstmStateData>());
  }

  // --- serialization -------------------------------------------------------

  void write(std::ostream& os) const {
    os.write("LRLM", 4);
    detail::put_u32(os, 2);  // version
    detail::put_u32(os, static_cast<std::uint32_t>(cells_.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(cfg_.d_x));
    detail::put_u32(os, static_cast<std::uint32_t>(cfg_.d_m));
    detail::put_u32(os, static_cast<std::uint32_t>(cfg_.d_r));
    detail::put_u32(os, self_normalized_ ? 1 : 0);
    detail::put_f64(os, alpha_);

    detail::put_u32(os, static_cast<std::uint32_t>(vocab_.size()));
    for (WordId w = 0; w < vocab_.size(); ++w) {
      detail::put_string(os, vocab_.word(w));
      detail::put_u64(os, vocab_.count_of(w));
      detail::put_u32(os, vocab_.is_nonspeech(w) ? 1 : 0);
    }
    detail::put_u64(os, vocab_.n_unk());
    for (WordId w : freq_order_) {
      detail::put_u32(os, static_cast<std::uint32_t>(w));
    }

    detail::put_matrix(os, embedding_);
    for (const auto& c : cells_) {
      detail::put_matrix(os, c.W_xi);
      detail::put_matrix(os, c.W_ri);
      detail::put_vector(os, c.D_wi);
      detail::put_vector(os, c.b_i);
      detail::put_matrix(os, c.W_xo);
      detail::put_matrix(os, c.W_ro);
      detail::put_vector(os, c.D_wo);
      detail::put_vector(os, c.b_o);
      detail::put_matrix(os, c.W_xc);
      detail::put_matrix(os, c.W_rc);
      detail::put_vector(os, c.b_c);
      detail::put_matrix(os, c.W_rm);
    }
    detail::put_matrix(os, softmax_w_);
    detail::put_vector(os, softmax_b_);

    detail::put_u32(os, pq_embedding_.has_value() ? 1 : 0);
    if (pq_embedding_) detail::put_codebook(os, *pq_embedding_);
    detail::put_u32(os, pq_softmax_.has_value() ? 1 : 0);
    if (pq_softmax_) detail::put_codebook(os, *pq_softmax_);
  }

  static LstmLm read(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    LR_CHECK(is && std::memcmp(magic, "LRLM", 4) == 0,
             "lstm model: bad magic");
    const auto version = detail::get_u32(is);
    LR_CHECK(version == 2, "lstm model: unsupported version " << version);

    LstmLm m;
    const auto layers = detail::get_u32(is);
    m.cfg_.layers = static_cast<int>(layers);
    m.cfg_.d_x = static_cast<int>(detail::get_u32(is));
    m.cfg_.d_m = static_cast<int>(detail::get_u32(is));
    m.cfg_.d_r = static_cast<int>(detail::get_u32(is));
    m.self_normalized_ = detail::get_u32(is) != 0;
    m.alpha_ = detail::get_f64(is);

    const auto V = detail::get_u32(is);
    for (std::uint32_t w = 0; w < V; ++w) {
      const std::string word = detail::get_string(is);
      const auto count = detail::get_u64(is);
      const bool ns = detail::get_u32(is) != 0;
      WordId id;
      if (w < Vocabulary::kNumReserved) {
        LR_CHECK(m.vocab_.word(static_cast<WordId>(w)) == word,
                 "lstm model: reserved token mismatch: " << word);
        id = static_cast<WordId>(w);
      } else {
        id = m.vocab_.add(word);
        LR_CHECK(id == static_cast<WordId>(w),
                 "lstm model: duplicate vocabulary entry: " << word);
      }
      if (count > 0) m.vocab_.count(id, count);
      if (ns) m.vocab_.mark_nonspeech(word);
    }
    m.vocab_.set_n_unk(detail::get_u64(is));
    m.freq_order_.resize(V);
    for (std::uint32_t w = 0; w < V; ++w) {
      m.freq_order_[w] = static_cast<WordId>(detail::get_u32(is));
    }

    m.embedding_ = detail::get_matrix(is);
    m.cells_.resize(layers);
    for (auto& c : m.cells_) {
      c.W_xi = detail::get_matrix(is);
      c.W_ri = detail::get_matrix(is);
      c.D_wi = detail::get_vector(is);
      c.b_i = detail::get_vector(is);
      c.W_xo = detail::get_matrix(is);
      c.W_ro = detail::get_matrix(is);
      c.D_wo = detail::get_vector(is);
      c.b_o = detail::get_vector(is);
      c.W_xc = detail::get_matrix(is);
      c.W_rc = detail::get_matrix(is);
      c.b_c = detail::get_vector(is);
      c.W_rm = detail::get_matrix(is);
      c.d_m = static_cast<int>(c.W_xi.rows());
      c.d_x = static_cast<int>(c.W_xi.cols());
      c.d_r = static_cast<int>(c.W_ri.cols());
    }
    m.softmax_w_ = detail::get_matrix(is);
    m.softmax_b_ = detail::get_vector(is);
    if (detail::get_u32(is) != 0) m.pq_embedding_ = detail::get_codebook(is);
    if (detail::get_u32(is) != 0) m.pq_softmax_ = detail::get_codebook(is);
    LR_CHECK(is, "lstm model: truncated file");
    return m;
  }

 private:
  double state_lse(const detail::LstmStateData& s) const {
    double lse = s.cached_lse.load(std::memory_order_relaxed);
    if (std::isnan(lse)) {
      const Vec u = logits(s.layers.back().r);
      lse = log_sum_exp(std::span<const double>(u.data(), u.size()));
      s.cached_lse.store(lse, std::memory_order_relaxed);
    }
    return lse;
  }

  Vocabulary vocab_;
  LstmConfig cfg_;
  Mat embedding_;
  std::vector<LstmCellParams> cells_;
  Mat softmax_w_;
  Vec softmax_b_;
  std::vector<WordId> freq_order_;
  bool self_normalized_ = false;
  double alpha_ = 0.0;
  bool selfnorm_scoring_ = false;
  std::optional<PQCodebook> pq_embedding_;
  std::optional<PQCodebook> pq_softmax_;
};

/// Mean |ln Z(h)| over the history states visited while consuming `tokens`.
inline double mean_abs_log_normalizer(const LstmLm& lm,
                                      std::span<const WordId> tokens) {
  LR_CHECK(!tokens.empty(), "mean_abs_log_normalizer: empty text");
  LMState s = lm.start();
  double acc = 0.0;
  for (WordId w : tokens) {
    acc += std::abs(lm.log_normalizer(s));
    s = lm.advance(s, w);
  }
  return acc / static_cast<double>(tokens.size());
}

}  // namespace latrescore
