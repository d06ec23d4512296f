// latrescore/lm.hpp
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

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "latrescore/common.hpp"
#include "latrescore/vocab.hpp"

namespace latrescore {

/// Base for model-specific state payloads.  Payloads are immutable once
/// published inside an LMState.
struct LMStateData {
  virtual ~LMStateData() = default;
  virtual std::uint64_t fingerprint() const = 0;
};

/// Opaque, copyable language model context handle.  Equality of fingerprints
/// means bit-identical state content (used for hypothesis recombination).
class LMState {
 public:
  LMState() = default;
  explicit LMState(std::shared_ptr<const LMStateData> data)
      : data_(std::move(data)) {}

  bool valid() const { return data_ != nullptr; }
  const LMStateData* get() const { return data_.get(); }
  std::uint64_t fingerprint() const {
    LR_CHECK(valid(), "fingerprint of null LM state");
    return data_->fingerprint();
  }

  template <typename T>
  const T& as() const {
    const T* p = dynamic_cast<const T*>(data_.get());
    LR_CHECK(p != nullptr, "LM state has unexpected type");
    return *p;
  }

 private:
  std::shared_ptr<const LMStateData> data_;
};

struct LMScoreResult {
  LMState next_state;
  double logprob = 0.0;  // natural log P(word | state)
};

/// Stateful single-word scoring interface shared by the N-gram and LSTM
/// models.  Implementations are immutable after construction/loading and safe
/// to score from many threads.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Vocabulary& vocab() const = 0;

  /// State for an empty history (sentence/segment start).
  virtual LMState start() const = 0;

  /// P(word | state) plus the advanced state.  `word` must be a valid id;
  /// callers map out-of-vocabulary words to <unk> (or use score_unk) first.
  virtual LMScoreResult score(const LMState& state, WordId word) const = 0;

  /// log P(word | state) without materializing the advanced state.  Override
  /// when that is cheaper than a full score() call.
  virtual double logprob(const LMState& state, WordId word) const {
    return score(state, word).logprob;
  }

  /// Scores an out-of-vocabulary token.  The default charges the plain <unk>
  /// probability; models that spread <unk> mass over the words it replaced
  /// override this.
  virtual LMScoreResult score_unk(const LMState& state) const {
    return score(state, Vocabulary::kUnk);
  }

  /// Convex combination of states with the given non-negative weights
  /// (normalized by the callee).  Models with discrete states cannot average;
  /// the default returns the state with the largest weight (lowest index on
  /// ties), which makes the pooling rescorer usable with any model.
  virtual LMState pool_states(std::span<const LMState> states,
                              std::span<const double> weights) const {
    LR_CHECK(!states.empty() && states.size() == weights.size(),
             "pool_states: bad arguments");
    std::size_t best = 0;
    for (std::size_t i = 1; i < states.size(); ++i) {
      if (weights[i] > weights[best]) best = i;
    }
    return states[best];
  }

  virtual std::size_t num_params() const = 0;
  virtual std::string name() const = 0;
};

/// exp of the average negative log probability per token.  Tokens equal to
/// <unk> are scored through score_unk so each model applies its own
/// unknown-word rule.  History runs through the whole stream.
inline double perplexity(const LanguageModel& lm,
                         std::span<const WordId> tokens) {
  LR_CHECK(!tokens.empty(), "perplexity of empty text");
  LMState s = lm.start();
  double total = 0.0;
  for (WordId w : tokens) {
    LMScoreResult r = w == Vocabulary::kUnk ? lm.score_unk(s) : lm.score(s, w);
    LR_CHECK(std::isfinite(r.logprob),
             "perplexity: non-finite log probability (unsmoothed zero?)");
    total += r.logprob;
    s = r.next_state;
  }
  return std::exp(-total / static_cast<double>(tokens.size()));
}

}  // namespace latrescore
