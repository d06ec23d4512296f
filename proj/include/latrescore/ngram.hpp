// latrescore/ngram.hpp
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
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "latrescore/common.hpp"
#include "latrescore/lm.hpp"
#include "latrescore/vocab.hpp"

namespace latrescore {

namespace detail {

struct NGramStateData final : LMStateData {
  std::vector<WordId> context;  // last (order-1) words, oldest first

  std::uint64_t fingerprint() const override {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (WordId w : context) {
      h ^= static_cast<std::uint64_t>(w) + 1;
      h *= 0x100000001b3ULL;
    }
    return h;
  }
};

}  // namespace detail

/// Backoff N-gram model with interpolated Witten-Bell smoothing.
///
/// Contexts live in a suffix trie: the node for context (h1..hk) is reached
/// from the root by following h_k, h_{k-1}, ...  Dropping the oldest word of
/// a context is then one step back along the walk, which makes backoff a
/// linear scan.  Unigrams are dense over the whole vocabulary, so scoring
/// always terminates with a finite value.
class NGramModel : public LanguageModel {
 public:
  int order() const { return order_; }
  const Vocabulary& vocab() const override { return vocab_; }

  LMState start() const override {
    auto d = std::make_shared<detail::NGramStateData>();
    d->context.assign(std::max(order_ - 1, 0), Vocabulary::kBos);
    return LMState(std::move(d));
  }

  LMScoreResult score(const LMState& state, WordId word) const override {
    const auto& s = state.as<detail::NGramStateData>();
    LR_CHECK(word >= 0 && word < vocab_.size(),
             "ngram score: unknown word id " << word);
    LMScoreResult r;
    r.logprob = logprob_context(s.context, word);
    auto d = std::make_shared<detail::NGramStateData>();
    d->context = s.context;
    if (order_ > 1) {
      d->context.push_back(word);
      if (static_cast<int>(d->context.size()) > order_ - 1) {
        d->context.erase(d->context.begin());
      }
    }
    r.next_state = LMState(std::move(d));
    return r;
  }

  double logprob(const LMState& state, WordId word) const override {
    return logprob_context(state.as<detail::NGramStateData>().context, word);
  }

  std::size_t num_params() const override {
    std::size_t n = unigram_ln_.size();
    for (const auto& node : nodes_) n += node.probs.size();
    return n - (nodes_.empty() ? 0 : nodes_[0].probs.size());
  }

  std::string name() const override {
    return std::to_string(order_) + "-gram";
  }

  /// ln P(word | context), backing off as needed.  `context` may be any
  /// length; only its last (order-1) words matter.
  double logprob_context(std::span<const WordId> context, WordId word) const {
    // Walk newest to oldest to find the chain of existing context nodes.
    int chain[kMaxOrder + 1];
    int depth = 0;
    chain[0] = 0;
    const int want = std::min<int>(order_ - 1, context.size());
    for (int k = 0; k < want; ++k) {
      const WordId w = context[context.size() - 1 - k];
      const int child = find_child(chain[depth], w);
      if (child < 0) break;
      chain[++depth] = child;
    }
    double acc = 0.0;
    for (int j = depth; j >= 1; --j) {
      const Node& n = nodes_[chain[j]];
      const auto it = std::lower_bound(
          n.probs.begin(), n.probs.end(), word,
          [](const auto& p, WordId w) { return p.first < w; });
      if (it != n.probs.end() && it->first == word) return acc + it->second;
      acc += n.bow;
    }
    return acc + unigram_ln_[word];
  }

  // --- training ---------------------------------------------------------

  /// Interpolated Witten-Bell estimation over a token stream.
  static NGramModel train(std::span<const WordId> corpus, int order,
                          const Vocabulary& vocab) {
    LR_CHECK(!corpus.empty(), "train_ngram: empty corpus");
    LR_CHECK(order >= 1 && order <= kMaxOrder,
             "train_ngram: order must be in [1, " << kMaxOrder << "]");
    LR_CHECK(vocab.size() <= 0xffff,
             "train_ngram: vocabulary too large for packed counting");

    NGramModel m;
    m.order_ = order;
    m.vocab_ = vocab;
    m.nodes_.emplace_back();  // root = empty context

    // Dense interpolated unigrams: (c(w) + T/|V|) / (C + T).
    const auto V = static_cast<std::size_t>(vocab.size());
    std::vector<double> c1(V, 0.0);
    for (WordId w : corpus) {
      LR_CHECK(w >= 0 && w < vocab.size(), "train_ngram: bad word id " << w);
      c1[w] += 1.0;
    }
    double types = 0.0;
    for (double c : c1) types += c > 0.0 ? 1.0 : 0.0;
    const double total = static_cast<double>(corpus.size());
    std::vector<double> uni(V);
    m.unigram_ln_.resize(V);
    for (std::size_t w = 0; w < V; ++w) {
      uni[w] = (c1[w] + types / static_cast<double>(V)) / (total + types);
      m.unigram_ln_[w] = std::log(uni[w]);
    }

    // Higher orders, built bottom-up so each level can interpolate with the
    // one below.  Counting uses packed keys + sort, grouping by context.
    using Key = unsigned __int128;
    for (int k = 2; k <= order; ++k) {
      if (static_cast<int>(corpus.size()) < k) break;
      std::vector<Key> keys;
      keys.reserve(corpus.size());
      for (std::size_t i = k - 1; i < corpus.size(); ++i) {
        Key key = 0;
        for (int j = k - 1; j >= 0; --j) {
          key = (key << 16) | static_cast<std::uint16_t>(corpus[i - j]);
        }
        keys.push_back(key);
      }
      std::sort(keys.begin(), keys.end());

      std::size_t i = 0;
      while (i < keys.size()) {
        // One context = run of keys equal in everything but the low word.
        const Key ctx_key = keys[i] >> 16;
        std::size_t j = i;
        double ctx_count = 0.0;
        int ctx_types = 0;
        std::vector<std::pair<WordId, double>> words;  // (word, count)
        while (j < keys.size() && (keys[j] >> 16) == ctx_key) {
          const auto w = static_cast<WordId>(keys[j] & 0xffff);
          std::size_t r = j;
          while (r < keys.size() && keys[r] == keys[j]) ++r;
          words.emplace_back(w, static_cast<double>(r - j));
          ctx_count += static_cast<double>(r - j);
          ++ctx_types;
          j = r;
        }
        // Context words, oldest first.
        WordId ctx[kMaxOrder];
        for (int q = 0; q < k - 1; ++q) {
          ctx[q] = static_cast<WordId>((ctx_key >> (16 * (k - 2 - q))) & 0xffff);
        }
        const double T = static_cast<double>(ctx_types);
        const int node = m.intern_context(std::span<const WordId>(ctx, k - 1));
        m.nodes_[node].bow = std::log(T / (ctx_count + T));
        auto& probs = m.nodes_[node].probs;
        probs.reserve(words.size());
        for (const auto& [w, c] : words) {
          const double lower = std::exp(m.logprob_context(
              std::span<const WordId>(ctx + 1, k - 2), w));
          probs.emplace_back(
              w, std::log((c + T * lower) / (ctx_count + T)));
        }
        std::sort(probs.begin(), probs.end());
        i = j;
      }
    }
    return m;
  }

  // --- ARPA serialization -------------------------------------------------

  void write_arpa(std::ostream& os) const;
  static NGramModel read_arpa(std::istream& is, Vocabulary vocab,
                              bool add_words = false);

  static constexpr int kMaxOrder = 8;

 private:
  struct Node {
    std::vector<std::pair<WordId, int>> children;   // sorted by word
    std::vector<std::pair<WordId, double>> probs;   // sorted by word, ln
    double bow = 0.0;                               // ln backoff weight
  };

  int find_child(int node, WordId w) const {
    const auto& ch = nodes_[node].children;
    const auto it = std::lower_bound(
        ch.begin(), ch.end(), w,
        [](const auto& p, WordId x) { return p.first < x; });
    return it != ch.end() && it->first == w ? it->second : -1;
  }

  /// Finds or creates the trie node for a context (oldest first).
  int intern_context(std::span<const WordId> ctx) {
    int node = 0;
    for (std::size_t k = 0; k < ctx.size(); ++k) {
      const WordId w = ctx[ctx.size() - 1 - k];
      int child = find_child(node, w);
      if (child < 0) {
        child = static_cast<int>(nodes_.size());
        auto& ch = nodes_[node].children;
        ch.insert(std::upper_bound(ch.begin(), ch.end(),
                                   std::make_pair(w, -1)),
                  {w, child});
        nodes_.emplace_back();
      }
      node = child;
    }
    return node;
  }

  int order_ = 1;
  Vocabulary vocab_;
  std::vector<double> unigram_ln_;
  std::vector<Node> nodes_{1};
};

inline NGramModel train_ngram(std::span<const WordId> corpus, int order,
                              const Vocabulary& vocab) {
  return NGramModel::train(corpus, order, vocab);
}

// ARPA text format: log10 probabilities and backoff weights.

inline void NGramModel::write_arpa(std::ostream& os) const {
  constexpr double kLn10 = 2.302585092994046;
  // Collect full n-grams per order by walking the trie.
  struct Entry {
    std::vector<WordId> words;
    double prob_ln;
    double bow_ln;
    bool has_bow;
  };
  std::vector<std::vector<Entry>> grams(order_ + 1);
  for (WordId w = 0; w < static_cast<WordId>(unigram_ln_.size()); ++w) {
    const int node = find_child(0, w);  // context (w) for its backoff weight
    grams[1].push_back({{w},
                        unigram_ln_[w],
                        node >= 0 ? nodes_[node].bow : 0.0,
                        node >= 0});
  }
  // Recursive walk: context nodes hold P(w | context).
  std::vector<WordId> ctx;  // newest first along the walk
  auto walk = [&](auto&& self, int node) -> void {
    const int k = static_cast<int>(ctx.size());
    if (k >= 1) {
      for (const auto& [w, p] : nodes_[node].probs) {
        Entry e;
        e.words.assign(ctx.rbegin(), ctx.rend());  // oldest first
        e.words.push_back(w);
        e.prob_ln = p;
        // Backoff weight of (ctx, w) as a context, if that context exists.
        int c = find_child(0, w);
        for (int q = 0; c >= 0 && q < k; ++q) c = find_child(c, ctx[q]);
        e.has_bow = c >= 0 && k + 1 < order_;
        e.bow_ln = e.has_bow ? nodes_[c].bow : 0.0;
        grams[k + 1].push_back(std::move(e));
      }
    }
    for (const auto& [w, child] : nodes_[node].children) {
      ctx.push_back(w);
      self(self, child);
      ctx.pop_back();
    }
  };
  walk(walk, 0);

  for (auto& g : grams) {
    std::sort(g.begin(), g.end(),
              [](const Entry& a, const Entry& b) { return a.words < b.words; });
  }

  os << "\\data\\\n";
  for (int k = 1; k <= order_; ++k) {
    os << "ngram " << k << "=" << grams[k].size() << "\n";
  }
  for (int k = 1; k <= order_; ++k) {
    os << "\n\\" << k << "-grams:\n";
    char buf[64];
    for (const Entry& e : grams[k]) {
      std::snprintf(buf, sizeof buf, "%.7f", e.prob_ln / kLn10);
      os << buf;
      for (WordId w : e.words) os << '\t' << vocab_.word(w);
      if (e.has_bow && e.bow_ln != 0.0) {
        std::snprintf(buf, sizeof buf, "%.7f", e.bow_ln / kLn10);
        os << '\t' << buf;
      }
      os << '\n';
    }
  }
  os << "\n\\end\\\n";
}

inline NGramModel NGramModel::read_arpa(std::istream& is, Vocabulary vocab,
                                        bool add_words) {
  constexpr double kLn10 = 2.302585092994046;
  std::string line;
  while (std::getline(is, line) && line.find("\\data\\") == std::string::npos) {
  }
  LR_CHECK(is, "arpa: missing \\data\\ header");
  int order = 0;
  while (std::getline(is, line)) {
    if (line.rfind("ngram ", 0) == 0) {
      order = std::max(order, std::stoi(line.substr(6)));
    } else if (!line.empty() && line[0] == '\\') {
      break;
    }
  }
  LR_CHECK(order >= 1, "arpa: no ngram counts");

  NGramModel m;
  m.order_ = order;
  m.vocab_ = std::move(vocab);

  int cur_order = 0;
  std::vector<std::tuple<std::vector<WordId>, double, double>> pending;
  auto flush_line = [&](const std::string& l) {
    std::istringstream ls(l);
    double p10;
    if (!(ls >> p10)) return;
    std::vector<std::string> toks;
    std::string t;
    while (ls >> t) toks.push_back(t);
    LR_CHECK(static_cast<int>(toks.size()) == cur_order ||
                 static_cast<int>(toks.size()) == cur_order + 1,
             "arpa: malformed " << cur_order << "-gram line: " << l);
    double bow10 = 0.0;
    bool has_bow = false;
    if (static_cast<int>(toks.size()) == cur_order + 1) {
      bow10 = std::stod(toks.back());
      toks.pop_back();
      has_bow = true;
    }
    std::vector<WordId> words;
    for (const auto& w : toks) {
      if (add_words) {
        words.push_back(m.vocab_.add(w));
      } else {
        const auto id = m.vocab_.find(w);
        LR_CHECK(id.has_value(), "arpa: unknown word '" << w << "'");
        words.push_back(*id);
      }
    }
    pending.emplace_back(std::move(words), p10 * kLn10,
                         has_bow ? bow10 * kLn10 : std::nan(""));
  };

  auto commit = [&]() {
    for (auto& [words, prob, bow] : pending) {
      if (words.size() == 1) {
        const auto w = static_cast<std::size_t>(words[0]);
        if (m.unigram_ln_.size() <= w) {
          m.unigram_ln_.resize(w + 1, -kInfCost);
        }
        m.unigram_ln_[w] = prob;
      } else {
        const int node = m.intern_context(
            std::span<const WordId>(words.data(), words.size() - 1));
        auto& probs = m.nodes_[node].probs;
        probs.emplace_back(words.back(), prob);
      }
      if (!std::isnan(bow)) {
        const int node = m.intern_context(words);
        m.nodes_[node].bow = bow;
      }
    }
    pending.clear();
  };

  do {
    if (line.find("\\end\\") != std::string::npos) break;
    if (!line.empty() && line[0] == '\\') {
      commit();
      const auto dash = line.find("-grams:");
      cur_order = dash != std::string::npos ? std::stoi(line.substr(1)) : 0;
      continue;
    }
    if (cur_order >= 1 && !line.empty()) flush_line(line);
  } while (std::getline(is, line));
  commit();

  m.unigram_ln_.resize(m.vocab_.size(), -kInfCost);
  for (auto& node : m.nodes_) {
    std::sort(node.probs.begin(), node.probs.end());
  }
  return m;
}

}  // namespace latrescore
