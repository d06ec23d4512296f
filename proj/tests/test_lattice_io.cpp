// tests/test_lattice_io.cpp
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

#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "latrescore/lattice_io.hpp"
#include "oracles.hpp"

using namespace latrescore;

TEST_CASE("read_lattice parses a small file") {
  Vocabulary v;
  v.add("hello");
  v.add("world");
  std::istringstream in(
      "# a comment\n"
      "lattice utt1 start=0\n"
      "0 1 hello 1.5 0.25\n"
      "1 2 world 2.0 0.5\n"
      "final 2\n");
  Lattice lat = read_lattice(in, v);
  CHECK(lat.id == "utt1");
  CHECK(lat.num_nodes == 3);
  CHECK(lat.arcs.size() == 2);
  CHECK(lat.arcs[0].word == *v.find("hello"));
  CHECK(lat.arcs[1].am_cost == 2.0);
  CHECK(lat.finals == std::vector<NodeId>{2});
}

TEST_CASE("read_lattice errors name the line") {
  Vocabulary v;
  v.add("a");

  SECTION("no arcs") {
    std::istringstream in("lattice empty start=0\nfinal 0\n");
    CHECK_THROWS_WITH(read_lattice(in, v),
                      Catch::Matchers::ContainsSubstring("no arcs"));
  }
  SECTION("unknown word") {
    std::istringstream in(
        "lattice u start=0\n0 1 mystery 1.0 1.0\nfinal 1\n");
    CHECK_THROWS_WITH(read_lattice(in, v),
                      Catch::Matchers::ContainsSubstring("line 2"));
  }
  SECTION("malformed arc") {
    std::istringstream in("lattice u start=0\n0 oops\nfinal 1\n");
    CHECK_THROWS_WITH(read_lattice(in, v),
                      Catch::Matchers::ContainsSubstring("line 2"));
  }
  SECTION("cycle") {
    std::istringstream in(
        "lattice u start=0\n0 1 a 1.0 1.0\n1 2 a 1.0 1.0\n2 1 a 1.0 1.0\n"
        "final 2\n");
    CHECK_THROWS_WITH(read_lattice(in, v),
                      Catch::Matchers::ContainsSubstring("line"));
  }
}

TEST_CASE("write then read is the identity on fuzzed lattices") {
  Vocabulary v;
  for (int i = 0; i < 12; ++i) v.add("tok" + std::to_string(i));
  Rng rng(97);
  for (int trial = 0; trial < 30; ++trial) {
    Lattice lat = oracles::random_lattice(rng, 3 + static_cast<int>(rng.uniform_int(10)),
                                          static_cast<int>(rng.uniform_int(12)), v, 4,
                                          0.15);
    lat.id = "fuzz" + std::to_string(trial);
    // stress the cost formatting with awkward values
    lat.arcs[0].am_cost = 1.0 / 3.0;
    lat.arcs[0].lm_cost = -0.12345678901234567;

    std::ostringstream out;
    write_lattice(out, lat, v);
    std::istringstream in(out.str());
    Lattice back = read_lattice(in, v);
    CHECK(back == lat);

    std::ostringstream out2;
    write_lattice(out2, back, v);
    CHECK(out2.str() == out.str());
  }
}

TEST_CASE("multiple lattices per stream") {
  Vocabulary v;
  v.add("x");
  std::istringstream in(
      "lattice a start=0\n0 1 x 1 1\nfinal 1\n"
      "lattice b start=0\n0 1 x 2 2\n0 1 x 3 3\nfinal 1\n");
  auto lats = read_lattices(in, v);
  REQUIRE(lats.size() == 2);
  CHECK(lats[0].id == "a");
  CHECK(lats[1].arcs.size() == 2);
}
