// latrescore/lattice_io.hpp
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

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "latrescore/lattice.hpp"
#include "latrescore/vocab.hpp"

namespace latrescore {

// Text lattice format, one lattice per `lattice` header:
//   lattice <id> start=<node>
//   <from> <to> <word> <am_cost> <lm_cost>
//   final <node>
// with `#` line comments.  Costs are printed with 17 significant digits so a
// write/read round trip reproduces doubles exactly.

namespace detail {

inline std::string format_cost(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, n);
}

}  // namespace detail

inline void write_lattice(std::ostream& os, const Lattice& lat,
                          const Vocabulary& vocab) {
  os << "lattice " << lat.id << " start=" << lat.start << '\n';
  for (const Arc& a : lat.arcs) {
    os << a.from << ' ' << a.to << ' ' << vocab.word(a.word) << ' '
       << detail::format_cost(a.am_cost) << ' '
       << detail::format_cost(a.lm_cost) << '\n';
  }
  for (NodeId f : lat.finals) os << "final " << f << '\n';
}

inline void write_lattices(std::ostream& os, const std::vector<Lattice>& lats,
                           const Vocabulary& vocab) {
  for (const Lattice& l : lats) write_lattice(os, l, vocab);
}

/// Parses every lattice in the stream.  Unknown words are an error unless
/// `add_words` is set, in which case they extend the vocabulary.  Each parsed
/// lattice is validated (acyclicity, connectivity).
inline std::vector<Lattice> read_lattices(std::istream& is, Vocabulary& vocab,
                                          bool add_words = false) {
  std::vector<Lattice> out;
  Lattice cur;
  bool open = false;
  int line_no = 0;
  NodeId max_node = -1;
  std::string line;

  auto finish = [&]() {
    if (!open) return;
    cur.num_nodes = max_node + 1;
    LR_CHECK(!cur.arcs.empty(),
             "line " << line_no << ": lattice " << cur.id << ": no arcs");
    try {
      validate(cur);
    } catch (const std::exception& e) {
      LR_CHECK(false, "line " << line_no << ": " << e.what());
    }
    out.push_back(std::move(cur));
    cur = Lattice{};
    max_node = -1;
  };

  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;

    if (tok == "lattice") {
      finish();
      open = true;
      std::string id, startkv;
      LR_CHECK(ls >> id >> startkv,
               "line " << line_no << ": malformed lattice header");
      LR_CHECK(startkv.rfind("start=", 0) == 0,
               "line " << line_no << ": expected start=<node>");
      cur.id = id;
      cur.start = std::stoi(startkv.substr(6));
      max_node = std::max(max_node, cur.start);
    } else if (tok == "final") {
      LR_CHECK(open, "line " << line_no << ": final before lattice header");
      int f;
      LR_CHECK(ls >> f, "line " << line_no << ": malformed final line");
      cur.finals.push_back(f);
      max_node = std::max(max_node, f);
    } else {
      LR_CHECK(open, "line " << line_no << ": arc before lattice header");
      Arc a;
      std::string word;
      try {
        a.from = std::stoi(tok);
      } catch (const std::exception&) {
        LR_CHECK(false, "line " << line_no << ": malformed arc line");
      }
      LR_CHECK(ls >> a.to >> word >> a.am_cost >> a.lm_cost,
               "line " << line_no << ": malformed arc line");
      std::string extra;
      LR_CHECK(!(ls >> extra), "line " << line_no << ": trailing tokens");
      if (add_words) {
        a.word = vocab.add(word);
      } else {
        const auto id = vocab.find(word);
        LR_CHECK(id.has_value(), "line " << line_no << ": unknown word '"
                                         << word << "'");
        a.word = *id;
      }
      cur.arcs.push_back(a);
      max_node = std::max({max_node, a.from, a.to});
    }
  }
  finish();
  return out;
}

/// Convenience single-lattice reader.
inline Lattice read_lattice(std::istream& is, Vocabulary& vocab,
                            bool add_words = false) {
  auto all = read_lattices(is, vocab, add_words);
  LR_CHECK(all.size() == 1,
           "expected exactly one lattice, found " << all.size());
  return std::move(all.front());
}

}  // namespace latrescore
