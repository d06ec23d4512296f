// latrescore/vocab.hpp
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
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "latrescore/common.hpp"

namespace latrescore {

/// Word table with dense ids starting at 0.  The first four ids are reserved:
/// epsilon, sentence begin/end and the unknown-word token.  Sentence boundary
/// tokens double as non-speech symbols; further non-speech tokens (pauses,
/// noise markers) can be registered with mark_nonspeech().
class Vocabulary {
 public:
  static constexpr WordId kEps = 0;
  static constexpr WordId kBos = 1;
  static constexpr WordId kEos = 2;
  static constexpr WordId kUnk = 3;
  static constexpr WordId kNumReserved = 4;

  Vocabulary() {
    add("<eps>");
    add("<s>");
    add("</s>");
    add("<unk>");
    nonspeech_.insert(kBos);
    nonspeech_.insert(kEos);
  }

  /// Returns the id for `w`, inserting it if absent.
  WordId add(const std::string& w) {
    auto it = index_.find(w);
    if (it != index_.end()) return it->second;
    const WordId id = static_cast<WordId>(words_.size());
    words_.push_back(w);
    counts_.push_back(0);
    index_.emplace(w, id);
    return id;
  }

  std::optional<WordId> find(const std::string& w) const {
    auto it = index_.find(w);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& word(WordId id) const {
    LR_CHECK(id >= 0 && id < static_cast<WordId>(words_.size()),
             "word id out of range: " << id);
    return words_[id];
  }

  WordId size() const { return static_cast<WordId>(words_.size()); }

  bool is_reserved(WordId id) const { return id >= 0 && id < kNumReserved; }

  void mark_nonspeech(const std::string& w) { nonspeech_.insert(add(w)); }
  bool is_nonspeech(WordId id) const { return nonspeech_.contains(id); }
  std::vector<WordId> nonspeech_ids() const {
    std::vector<WordId> ids(nonspeech_.begin(), nonspeech_.end());
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  void count(WordId id, std::uint64_t n = 1) {
    LR_CHECK(id >= 0 && id < size(), "count: bad word id " << id);
    counts_[id] += n;
  }
  std::uint64_t count_of(WordId id) const { return counts_[id]; }
  std::uint64_t total_count() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
  }

  /// Number of distinct training words that were collapsed onto <unk>.
  std::uint64_t n_unk() const { return n_unk_; }
  void set_n_unk(std::uint64_t n) { n_unk_ = n; }

  /// Ids ordered by descending training count (ties by ascending id).
  /// Position in this list is the word's frequency rank; rank 0 is the most
  /// frequent word, which is what the log-uniform negative sampler expects.
  std::vector<WordId> ids_by_frequency() const {
    std::vector<WordId> ids(words_.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](WordId a, WordId b) {
      return counts_[a] != counts_[b] ? counts_[a] > counts_[b] : a < b;
    });
    return ids;
  }

  bool operator==(const Vocabulary& o) const {
    return words_ == o.words_ && counts_ == o.counts_ &&
           nonspeech_ == o.nonspeech_ && n_unk_ == o.n_unk_;
  }

  /// Text form: one `word<TAB>count<TAB>flags` line per id.
  void write(std::ostream& os) const {
    for (WordId id = 0; id < size(); ++id) {
      os << words_[id] << '\t' << counts_[id] << '\t'
         << (is_nonspeech(id) ? "ns" : "-") << '\n';
    }
  }

  static Vocabulary read(std::istream& is) {
    Vocabulary v;
    std::string line;
    WordId id = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto t1 = line.find('\t');
      const auto t2 = line.find('\t', t1 + 1);
      LR_CHECK(t1 != std::string::npos && t2 != std::string::npos,
               "vocabulary: malformed line: " << line);
      const std::string w = line.substr(0, t1);
      if (id < kNumReserved) {
        LR_CHECK(v.word(id) == w, "vocabulary: reserved token mismatch: " << w);
      } else {
        LR_CHECK(v.add(w) == id, "vocabulary: duplicate word: " << w);
      }
      v.counts_[id] = std::stoull(line.substr(t1 + 1, t2 - t1 - 1));
      if (line.substr(t2 + 1) == "ns") v.nonspeech_.insert(id);
      ++id;
    }
    LR_CHECK(id >= kNumReserved, "vocabulary: missing reserved tokens");
    return v;
  }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, WordId> index_;
  std::unordered_set<WordId> nonspeech_;
  std::uint64_t n_unk_ = 0;
};

/// Whitespace tokenizer with optional lowercasing.
inline std::vector<std::string> tokenize(const std::string& text,
                                         bool lowercase = false) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream is(text);
  while (is >> tok) {
    if (lowercase) {
      for (char& c : tok) c = static_cast<char>(std::tolower(c));
    }
    out.push_back(tok);
  }
  return out;
}

/// Builds a capped vocabulary from a token stream and maps the stream onto
/// ids.  The most frequent `max_words` tokens are kept; everything else maps
/// to <unk>, with N_UNK recording how many distinct words were collapsed.
struct MappedCorpus {
  Vocabulary vocab;
  std::vector<WordId> ids;
};

inline MappedCorpus build_corpus(const std::vector<std::string>& tokens,
                                 WordId max_words = 0,
                                 const std::vector<std::string>& nonspeech = {}) {
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const auto& t : tokens) ++freq[t];

  std::vector<std::pair<std::string, std::uint64_t>> order(freq.begin(),
                                                           freq.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  MappedCorpus out;
  for (const auto& ns : nonspeech) out.vocab.mark_nonspeech(ns);
  std::uint64_t dropped = 0;
  for (const auto& [w, c] : order) {
    if (max_words > 0 && out.vocab.size() >= max_words &&
        !out.vocab.find(w).has_value()) {
      ++dropped;
      continue;
    }
    out.vocab.add(w);
  }
  out.vocab.set_n_unk(std::max<std::uint64_t>(dropped, dropped > 0 ? 1 : 0));

  out.ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    const auto id = out.vocab.find(t);
    WordId mapped = id.value_or(Vocabulary::kUnk);
    out.ids.push_back(mapped);
    out.vocab.count(mapped);
  }
  return out;
}

}  // namespace latrescore
