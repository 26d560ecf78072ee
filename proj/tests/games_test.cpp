// Copyright 2026 The ekfp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ekfp/games.hpp"
#include "ekfp/rng.hpp"

namespace {

using ekfp::games::Game;
using ekfp::games::JointAction;
using ekfp::games::MixedStrategy;

Game coordination_game() {
  return ekfp::games::load_game(std::string(EKFP_DATA_DIR) +
                                "/games/coordination.json");
}

Game climbing_hill_game() {
  return ekfp::games::load_game(std::string(EKFP_DATA_DIR) +
                                "/games/climbing_hill.json");
}

// Independent oracle: expected utility by looping over raw tensor indices,
// written without reusing any library enumeration helper.
double oracle_expected_utility(const Game& g, int player, int action,
                               const std::vector<MixedStrategy>& opp) {
  double total = 0.0;
  for (std::size_t idx = 0; idx < g.num_joint_actions(); ++idx) {
    JointAction joint = g.joint_from_index(idx);
    if (joint[player] != action) continue;
    double prob = 1.0;
    int slot = 0;
    for (int j = 0; j < g.num_players(); ++j) {
      if (j == player) continue;
      prob *= opp[static_cast<std::size_t>(slot)]
                  .probs[static_cast<std::size_t>(joint[j])];
      ++slot;
    }
    total += prob * g.payoff(player, joint);
  }
  return total;
}

// Independent oracle: Nash check by direct double loop over deviations.
bool oracle_is_nash(const Game& g, const JointAction& joint) {
  for (int i = 0; i < g.num_players(); ++i) {
    double base = g.payoff(i, joint);
    for (int a = 0; a < g.num_actions(i); ++a) {
      JointAction dev = joint;
      dev.actions[static_cast<std::size_t>(i)] = a;
      if (g.payoff(i, dev) > base) return false;
    }
  }
  return true;
}

Game random_game(ekfp::RandomStream& rng, int n_players, int max_actions) {
  std::vector<int> counts;
  std::size_t joint = 1;
  for (int i = 0; i < n_players; ++i) {
    int c = 2 + rng.uniform_int(max_actions - 1);
    counts.push_back(c);
    joint *= static_cast<std::size_t>(c);
  }
  std::vector<std::vector<double>> payoffs;
  for (int i = 0; i < n_players; ++i) {
    std::vector<double> t(joint);
    for (double& v : t) v = rng.uniform(-10.0, 10.0);
    payoffs.push_back(std::move(t));
  }
  return Game(std::move(counts), std::move(payoffs));
}

}  // namespace

TEST_CASE("joint indexing is row-major with player 0 slowest") {
  Game g = climbing_hill_game();
  REQUIRE(g.num_players() == 3);
  REQUIRE(g.num_joint_actions() == 27);
  // index = (a0*3 + a1)*3 + a2
  REQUIRE(g.joint_index(JointAction{{0, 0, 0}}) == 0);
  REQUIRE(g.joint_index(JointAction{{0, 0, 2}}) == 2);
  REQUIRE(g.joint_index(JointAction{{0, 1, 0}}) == 3);
  REQUIRE(g.joint_index(JointAction{{1, 0, 0}}) == 9);
  REQUIRE(g.joint_index(JointAction{{2, 2, 2}}) == 26);
  for (std::size_t idx = 0; idx < g.num_joint_actions(); ++idx)
    REQUIRE(g.joint_index(g.joint_from_index(idx)) == idx);
}

TEST_CASE("game constructor rejects malformed input") {
  REQUIRE_THROWS_AS(Game({2, 2}, {{1, 0, 0}, {1, 0, 0, 1}}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(Game({2, 2}, {{1, 0, 0, 1}}), std::invalid_argument);
  REQUIRE_THROWS_AS(Game({2, 0}, {{}, {}}), std::invalid_argument);
  REQUIRE_THROWS_AS(
      Game({2}, {{1.0, std::numeric_limits<double>::infinity()}}),
      std::invalid_argument);
}

TEST_CASE("mixed strategy validity") {
  REQUIRE(MixedStrategy::uniform(3).valid());
  REQUIRE(MixedStrategy::pure(4, 2).valid());
  REQUIRE_FALSE(MixedStrategy{{0.5, 0.6}}.valid());
  REQUIRE_FALSE(MixedStrategy{{-0.1, 1.1}}.valid());
  REQUIRE(MixedStrategy::pure(4, 2).probs[2] == 1.0);
}

TEST_CASE("expected utility on the coordination game") {
  Game g = coordination_game();
  // Opponent plays L for sure: row payoff of U is the (U,L) entry.
  REQUIRE(ekfp::games::expected_utility(g, 0, 0, {MixedStrategy{{1.0, 0.0}}}) ==
          1.0);
  // Uniform opponent: 1*0.5 + 0*0.5.
  REQUIRE(ekfp::games::expected_utility(
              g, 0, 0, {MixedStrategy{{0.5, 0.5}}}) == 0.5);
}

TEST_CASE("expected utility is exact under degenerate strategies") {
  ekfp::RandomStream rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    Game g = random_game(rng, 3, 4);
    for (int player = 0; player < 3; ++player) {
      std::vector<MixedStrategy> opp;
      JointAction joint{{0, 0, 0}};
      for (int j = 0; j < 3; ++j) {
        int a = rng.uniform_int(g.num_actions(j));
        joint.actions[static_cast<std::size_t>(j)] = a;
        if (j != player) opp.push_back(MixedStrategy::pure(g.num_actions(j), a));
      }
      for (int a = 0; a < g.num_actions(player); ++a) {
        joint.actions[static_cast<std::size_t>(player)] = a;
        // Bitwise equality: a one-term sum must be a plain tensor lookup.
        REQUIRE(ekfp::games::expected_utility(g, player, a, opp) ==
                g.payoff(player, joint));
      }
    }
  }
}

TEST_CASE("expected utility matches an independent enumeration oracle") {
  ekfp::RandomStream rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    Game g = random_game(rng, 2 + rng.uniform_int(2), 4);
    for (int player = 0; player < g.num_players(); ++player) {
      std::vector<MixedStrategy> opp;
      for (int j = 0; j < g.num_players(); ++j) {
        if (j == player) continue;
        std::vector<double> p(static_cast<std::size_t>(g.num_actions(j)));
        double sum = 0.0;
        for (double& x : p) {
          x = rng.uniform_positive(1.0);
          sum += x;
        }
        for (double& x : p) x /= sum;
        opp.push_back(MixedStrategy{std::move(p)});
      }
      for (int a = 0; a < g.num_actions(player); ++a) {
        double got = ekfp::games::expected_utility(g, player, a, opp);
        double want = oracle_expected_utility(g, player, a, opp);
        REQUIRE_THAT(got, Catch::Matchers::WithinAbs(want, 1e-12));
      }
    }
  }
}

TEST_CASE("expected utility rejects dimension mismatches") {
  Game g = coordination_game();
  REQUIRE_THROWS_AS(
      ekfp::games::expected_utility(g, 0, 0, {MixedStrategy{{1.0, 0.0, 0.0}}}),
      std::invalid_argument);
  REQUIRE_THROWS_AS(ekfp::games::expected_utility(
                        g, 0, 0, std::vector<MixedStrategy>{}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(
      ekfp::games::expected_utility(g, 0, 5, {MixedStrategy{{1.0, 0.0}}}),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      ekfp::games::expected_utility(g, 2, 0, {MixedStrategy{{1.0, 0.0}}}),
      std::invalid_argument);
}

TEST_CASE("best response on the coordination game") {
  Game g = coordination_game();
  REQUIRE(ekfp::games::best_response(g, 0, {MixedStrategy{{0.6, 0.4}}}) == 0);
  REQUIRE(ekfp::games::best_response(g, 0, {MixedStrategy{{0.4, 0.6}}}) == 1);
  // Exact tie resolves to the lowest index.
  REQUIRE(ekfp::games::best_response(g, 0, {MixedStrategy{{0.5, 0.5}}}) == 0);
}

TEST_CASE("best response on the climbing hill game") {
  Game g = climbing_hill_game();
  // Opponents pinned at (col U, matrix D): row payoffs are 100, 0, 0.
  std::vector<MixedStrategy> opp{MixedStrategy::pure(3, 0),
                                 MixedStrategy::pure(3, 2)};
  REQUIRE(ekfp::games::best_response(g, 0, opp) == 0);
}

TEST_CASE("best response is invariant under positive affine payoff maps") {
  ekfp::RandomStream rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    Game g = random_game(rng, 2 + rng.uniform_int(2), 4);
    int player = rng.uniform_int(g.num_players());
    std::vector<MixedStrategy> opp;
    for (int j = 0; j < g.num_players(); ++j) {
      if (j == player) continue;
      std::vector<double> p(static_cast<std::size_t>(g.num_actions(j)));
      double sum = 0.0;
      for (double& x : p) {
        x = rng.uniform_positive(1.0);
        sum += x;
      }
      for (double& x : p) x /= sum;
      opp.push_back(MixedStrategy{std::move(p)});
    }
    int base = ekfp::games::best_response(g, player, opp);

    double scale = rng.uniform_positive(5.0);
    double shift = rng.uniform(-3.0, 3.0);
    std::vector<std::vector<double>> payoffs;
    for (int j = 0; j < g.num_players(); ++j)
      payoffs.push_back(g.payoff_tensor(j));
    for (double& v : payoffs[static_cast<std::size_t>(player)])
      v = scale * v + shift;
    Game h(g.action_counts(), std::move(payoffs));
    REQUIRE(ekfp::games::best_response(h, player, opp) == base);
  }
}

TEST_CASE("pure Nash checks on the bundled games") {
  Game coord = coordination_game();
  auto ul = ekfp::games::check_pure_nash(coord, JointAction{{0, 0}});
  REQUIRE(ul.is_nash);
  REQUIRE(ul.is_strict);
  auto dr = ekfp::games::check_pure_nash(coord, JointAction{{1, 1}});
  REQUIRE(dr.is_nash);
  REQUIRE(dr.is_strict);
  REQUIRE_FALSE(ekfp::games::is_pure_nash(coord, JointAction{{0, 1}}));
  REQUIRE_FALSE(ekfp::games::is_pure_nash(coord, JointAction{{1, 0}}));

  auto eq = ekfp::games::pure_nash_equilibria(coord);
  REQUIRE(eq.size() == 2);
  REQUIRE(eq[0] == JointAction{{0, 0}});
  REQUIRE(eq[1] == JointAction{{1, 1}});

  Game hill = climbing_hill_game();
  auto uud = ekfp::games::check_pure_nash(hill, JointAction{{0, 0, 2}});
  REQUIRE(uud.is_nash);
  REQUIRE(uud.is_strict);
  REQUIRE(hill.payoff(0, JointAction{{0, 0, 2}}) == 100.0);
}

TEST_CASE("is_pure_nash agrees with an independent deviation enumeration") {
  ekfp::RandomStream rng(13);
  for (int rep = 0; rep < 40; ++rep) {
    Game g = random_game(rng, 2 + rng.uniform_int(2), 4);
    for (std::size_t idx = 0; idx < g.num_joint_actions(); ++idx) {
      JointAction joint = g.joint_from_index(idx);
      REQUIRE(ekfp::games::is_pure_nash(g, joint) == oracle_is_nash(g, joint));
    }
  }
}

TEST_CASE("strictness flag demands a unique best reply") {
  // Player 1 is indifferent between L and R at (U,L): equilibrium, not strict.
  Game g({2, 2}, {{1, 0, 0, 1}, {1, 1, 0, 1}});
  auto r = ekfp::games::check_pure_nash(g, JointAction{{0, 0}});
  REQUIRE(r.is_nash);
  REQUIRE_FALSE(r.is_strict);
}

TEST_CASE("wonderful-life construction from the coordination global") {
  Game coord = coordination_game();
  auto global = [&](const JointAction& s) { return coord.global(s); };
  Game wlu = ekfp::games::wlu_game_from_global(global, {2, 2}, {0, 0});

  // u^0(D,L) = g(D,L) - g(U,L) = 0 - 1.
  REQUIRE(wlu.payoff(0, JointAction{{1, 0}}) == -1.0);
  // Playing one's own reference action always yields zero.
  for (int b = 0; b < 2; ++b) {
    REQUIRE(wlu.payoff(0, JointAction{{0, b}}) == 0.0);
    REQUIRE(wlu.payoff(1, JointAction{{b, 0}}) == 0.0);
  }
  REQUIRE(wlu.has_global());
  REQUIRE(ekfp::games::is_potential_game(wlu, global));
}

TEST_CASE("wlu deviations reproduce global deviations exactly") {
  ekfp::RandomStream rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> counts{2 + rng.uniform_int(2), 2 + rng.uniform_int(2),
                            2 + rng.uniform_int(2)};
    std::size_t joint = static_cast<std::size_t>(counts[0]) *
                        static_cast<std::size_t>(counts[1]) *
                        static_cast<std::size_t>(counts[2]);
    std::vector<double> tensor(joint);
    for (double& v : tensor) v = rng.uniform(-5.0, 5.0);
    std::vector<int> ref{rng.uniform_int(counts[0]), rng.uniform_int(counts[1]),
                         rng.uniform_int(counts[2])};

    Game shape(counts, std::vector<std::vector<double>>(
                           3, std::vector<double>(joint, 0.0)));
    auto global = [&](const JointAction& s) {
      return tensor[shape.joint_index(s)];
    };
    Game wlu = ekfp::games::wlu_game_from_global(global, counts, ref);
    REQUIRE(ekfp::games::is_potential_game(wlu, global));

    for (std::size_t idx = 0; idx < joint; ++idx) {
      JointAction s = wlu.joint_from_index(idx);
      for (int i = 0; i < 3; ++i) {
        for (int a = 0; a < counts[static_cast<std::size_t>(i)]; ++a) {
          JointAction d = s;
          d.actions[static_cast<std::size_t>(i)] = a;
          double du = wlu.payoff(i, d) - wlu.payoff(i, s);
          double dg = global(d) - global(s);
          REQUIRE_THAT(du, Catch::Matchers::WithinAbs(dg, 1e-12));
        }
      }
    }
  }
}

TEST_CASE("wlu rejects bad reference actions and non-finite globals") {
  auto zero = [](const JointAction&) { return 0.0; };
  REQUIRE_THROWS_AS(ekfp::games::wlu_game_from_global(zero, {2, 2}, {0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ekfp::games::wlu_game_from_global(zero, {2, 2}, {0, 2}),
                    std::invalid_argument);
  auto bad = [](const JointAction&) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  REQUIRE_THROWS_AS(ekfp::games::wlu_game_from_global(bad, {2, 2}, {0, 0}),
                    std::invalid_argument);
}

TEST_CASE("potential check accepts identical-interest games") {
  Game coord = coordination_game();
  auto phi = [&](const JointAction& s) { return coord.global(s); };
  REQUIRE(ekfp::games::is_potential_game(coord, phi));

  Game hill = climbing_hill_game();
  auto phi3 = [&](const JointAction& s) { return hill.global(s); };
  REQUIRE(ekfp::games::is_potential_game(hill, phi3));
}

TEST_CASE("potential check rejects matching pennies with a constant") {
  // Zero-sum: admits no potential function at all.
  Game pennies({2, 2}, {{1, -1, -1, 1}, {-1, 1, 1, -1}});
  REQUIRE_FALSE(ekfp::games::is_potential_game(
      pennies, [](const JointAction&) { return 0.0; }));
}

TEST_CASE("json round trip preserves the game") {
  Game hill = climbing_hill_game();
  nlohmann::json j = ekfp::games::game_to_json(hill);
  Game back = ekfp::games::game_from_json(j);
  REQUIRE(back.action_counts() == hill.action_counts());
  for (int i = 0; i < hill.num_players(); ++i)
    REQUIRE(back.payoff_tensor(i) == hill.payoff_tensor(i));
  REQUIRE(back.has_global());
  REQUIRE(*back.global_tensor() == *hill.global_tensor());
  REQUIRE(back.name() == "climbing_hill");
  REQUIRE(back.action_labels()[2][2] == "D");
}

TEST_CASE("json loader rejects inconsistent documents") {
  nlohmann::json j;
  j["actions"] = {{"U", "D"}, {"L", "R"}};
  j["payoffs"] = {{1, 0, 0}, {1, 0, 0, 1}};
  REQUIRE_THROWS(ekfp::games::game_from_json(j));
  REQUIRE_THROWS(ekfp::games::game_from_json(nlohmann::json::object()));
  REQUIRE_THROWS(ekfp::games::load_game("/nonexistent/game.json"));
}
