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

#ifndef EKFP_GAMES_HPP
#define EKFP_GAMES_HPP

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace ekfp::games {

/// Probability distribution over one player's actions.
struct MixedStrategy {
  std::vector<double> probs;

  static MixedStrategy uniform(int n) {
    return {std::vector<double>(static_cast<std::size_t>(n), 1.0 / n)};
  }
  static MixedStrategy pure(int n, int action) {
    MixedStrategy s{std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    s.probs.at(static_cast<std::size_t>(action)) = 1.0;
    return s;
  }

  int size() const { return static_cast<int>(probs.size()); }

  bool valid(double tol = 1e-9) const {
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0) || !std::isfinite(p)) return false;
      sum += p;
    }
    return std::abs(sum - 1.0) <= tol;
  }
};

/// One action index per player.
struct JointAction {
  std::vector<int> actions;

  bool operator==(const JointAction& other) const = default;
  int size() const { return static_cast<int>(actions.size()); }
  int operator[](int player) const {
    return actions[static_cast<std::size_t>(player)];
  }
};

/// Finite strategic-form game held as one dense payoff tensor per player,
/// flattened row-major with player 0's action index varying slowest. A game
/// may additionally carry a shared "global" tensor (set for identical-interest
/// games and games built from a global utility).
class Game {
 public:
  Game(std::vector<int> action_counts, std::vector<std::vector<double>> payoffs,
       std::optional<std::vector<double>> global = std::nullopt,
       std::vector<std::vector<std::string>> action_labels = {},
       std::string name = "")
      : name_(std::move(name)),
        action_counts_(std::move(action_counts)),
        action_labels_(std::move(action_labels)),
        payoffs_(std::move(payoffs)),
        global_(std::move(global)) {
    if (action_counts_.empty()) throw std::invalid_argument("game: no players");
    num_joint_ = 1;
    for (int c : action_counts_) {
      if (c <= 0) throw std::invalid_argument("game: nonpositive action count");
      num_joint_ *= static_cast<std::size_t>(c);
    }
    if (payoffs_.size() != action_counts_.size())
      throw std::invalid_argument("game: need one payoff tensor per player");
    for (const auto& tensor : payoffs_) check_tensor(tensor);
    if (global_) check_tensor(*global_);
    if (!action_labels_.empty()) {
      if (action_labels_.size() != action_counts_.size())
        throw std::invalid_argument("game: label/player mismatch");
      for (std::size_t i = 0; i < action_labels_.size(); ++i)
        if (static_cast<int>(action_labels_[i].size()) != action_counts_[i])
          throw std::invalid_argument("game: label/action mismatch");
    }
  }

  const std::string& name() const { return name_; }
  int num_players() const { return static_cast<int>(action_counts_.size()); }
  int num_actions(int player) const {
    return action_counts_[static_cast<std::size_t>(player)];
  }
  const std::vector<int>& action_counts() const { return action_counts_; }
  const std::vector<std::vector<std::string>>& action_labels() const {
    return action_labels_;
  }
  std::size_t num_joint_actions() const { return num_joint_; }

  std::size_t joint_index(const JointAction& joint) const {
    if (joint.size() != num_players())
      throw std::invalid_argument("joint action: wrong number of players");
    std::size_t idx = 0;
    for (int i = 0; i < num_players(); ++i) {
      int a = joint[i];
      if (a < 0 || a >= num_actions(i))
        throw std::invalid_argument("joint action: index out of range");
      idx = idx * static_cast<std::size_t>(num_actions(i)) +
            static_cast<std::size_t>(a);
    }
    return idx;
  }

  JointAction joint_from_index(std::size_t idx) const {
    JointAction joint{std::vector<int>(static_cast<std::size_t>(num_players()))};
    for (int i = num_players() - 1; i >= 0; --i) {
      auto c = static_cast<std::size_t>(num_actions(i));
      joint.actions[static_cast<std::size_t>(i)] = static_cast<int>(idx % c);
      idx /= c;
    }
    return joint;
  }

  double payoff(int player, const JointAction& joint) const {
    return payoffs_[static_cast<std::size_t>(player)][joint_index(joint)];
  }
  const std::vector<double>& payoff_tensor(int player) const {
    return payoffs_[static_cast<std::size_t>(player)];
  }

  bool has_global() const { return global_.has_value(); }
  double global(const JointAction& joint) const {
    return global_.value()[joint_index(joint)];
  }
  const std::optional<std::vector<double>>& global_tensor() const {
    return global_;
  }

 private:
  void check_tensor(const std::vector<double>& tensor) const {
    if (tensor.size() != num_joint_)
      throw std::invalid_argument("game: payoff tensor has wrong size");
    for (double v : tensor)
      if (!std::isfinite(v))
        throw std::invalid_argument("game: non-finite payoff");
  }

  std::string name_;
  std::vector<int> action_counts_;
  std::vector<std::vector<std::string>> action_labels_;
  std::vector<std::vector<double>> payoffs_;
  std::optional<std::vector<double>> global_;
  std::size_t num_joint_ = 0;
};

namespace detail {

inline void check_opponent_strategies(const Game& game, int player,
                                      std::span<const MixedStrategy> opponents) {
  if (player < 0 || player >= game.num_players())
    throw std::invalid_argument("player index out of range");
  if (static_cast<int>(opponents.size()) != game.num_players() - 1)
    throw std::invalid_argument("need exactly one strategy per opponent");
  int slot = 0;
  for (int j = 0; j < game.num_players(); ++j) {
    if (j == player) continue;
    if (opponents[static_cast<std::size_t>(slot)].size() != game.num_actions(j))
      throw std::invalid_argument("opponent strategy dimension mismatch");
    ++slot;
  }
}

// Visits every joint opponent action with its product probability, skipping
// zero-probability branches so degenerate strategies reduce to a single exact
// tensor lookup.
template <typename Fn>
void for_each_opponent_joint(const Game& game, int player,
                             std::span<const MixedStrategy> opponents, Fn&& fn) {
  std::vector<int> joint(static_cast<std::size_t>(game.num_players()), 0);
  std::vector<int> opp_players;
  for (int j = 0; j < game.num_players(); ++j)
    if (j != player) opp_players.push_back(j);

  std::function<void(std::size_t, double)> recurse =
      [&](std::size_t depth, double prob) {
        if (depth == opp_players.size()) {
          fn(joint, prob);
          return;
        }
        int j = opp_players[depth];
        const auto& sigma = opponents[depth].probs;
        for (int a = 0; a < game.num_actions(j); ++a) {
          double p = sigma[static_cast<std::size_t>(a)];
          if (p == 0.0) continue;
          joint[static_cast<std::size_t>(j)] = a;
          recurse(depth + 1, depth == 0 ? p : prob * p);
        }
      };
  recurse(0, 1.0);
}

}  // namespace detail

/// Expected payoff of `action` for `player` against independent opponent
/// strategies (one per opponent, in increasing player order).
inline double expected_utility(const Game& game, int player, int action,
                               std::span<const MixedStrategy> opponents) {
  detail::check_opponent_strategies(game, player, opponents);
  if (action < 0 || action >= game.num_actions(player))
    throw std::invalid_argument("action index out of range");
  double total = 0.0;
  detail::for_each_opponent_joint(
      game, player, opponents, [&](std::vector<int>& joint, double prob) {
        joint[static_cast<std::size_t>(player)] = action;
        total += prob * game.payoff(player, JointAction{joint});
      });
  return total;
}

inline double expected_utility(const Game& game, int player, int action,
                               const std::vector<MixedStrategy>& opponents) {
  return expected_utility(game, player, action,
                          std::span<const MixedStrategy>(opponents));
}

/// Argmax of expected utility; ties break to the lowest action index.
inline int best_response(const Game& game, int player,
                         std::span<const MixedStrategy> opponents) {
  detail::check_opponent_strategies(game, player, opponents);
  int best = 0;
  double best_value = expected_utility(game, player, 0, opponents);
  for (int a = 1; a < game.num_actions(player); ++a) {
    double v = expected_utility(game, player, a, opponents);
    if (v > best_value) {
      best_value = v;
      best = a;
    }
  }
  return best;
}

inline int best_response(const Game& game, int player,
                         const std::vector<MixedStrategy>& opponents) {
  return best_response(game, player, std::span<const MixedStrategy>(opponents));
}

struct NashCheck {
  bool is_nash = false;
  bool is_strict = false;  // every played action is the unique best reply
};

/// Checks whether any player gains from a unilateral deviation.
inline NashCheck check_pure_nash(const Game& game, const JointAction& joint) {
  game.joint_index(joint);  // validates
  NashCheck result{true, true};
  JointAction probe = joint;
  for (int i = 0; i < game.num_players(); ++i) {
    double played = game.payoff(i, joint);
    for (int a = 0; a < game.num_actions(i); ++a) {
      if (a == joint[i]) continue;
      probe.actions[static_cast<std::size_t>(i)] = a;
      double dev = game.payoff(i, probe);
      if (dev > played) result.is_nash = false;
      if (dev >= played) result.is_strict = false;
    }
    probe.actions[static_cast<std::size_t>(i)] = joint[i];
  }
  if (!result.is_nash) result.is_strict = false;
  return result;
}

inline bool is_pure_nash(const Game& game, const JointAction& joint) {
  return check_pure_nash(game, joint).is_nash;
}

inline std::vector<JointAction> pure_nash_equilibria(const Game& game) {
  std::vector<JointAction> out;
  for (std::size_t idx = 0; idx < game.num_joint_actions(); ++idx) {
    JointAction joint = game.joint_from_index(idx);
    if (is_pure_nash(game, joint)) out.push_back(joint);
  }
  return out;
}

/// Builds the game whose player utilities are the global utility minus the
/// global utility with that player's action replaced by a reference action.
/// The global utility is then a potential of the returned game, and is stored
/// as its global tensor.
inline Game wlu_game_from_global(
    const std::function<double(const JointAction&)>& global_utility,
    std::vector<int> action_counts, const std::vector<int>& reference_actions) {
  if (reference_actions.size() != action_counts.size())
    throw std::invalid_argument("wlu: one reference action per player");
  for (std::size_t i = 0; i < action_counts.size(); ++i)
    if (reference_actions[i] < 0 || reference_actions[i] >= action_counts[i])
      throw std::invalid_argument("wlu: reference action out of range");

  const int n = static_cast<int>(action_counts.size());
  std::size_t num_joint = 1;
  for (int c : action_counts) num_joint *= static_cast<std::size_t>(c);

  // Cache the global tensor once; it is reused per player below.
  Game index_helper(action_counts,
                    std::vector<std::vector<double>>(
                        action_counts.size(), std::vector<double>(num_joint, 0.0)));
  std::vector<double> global(num_joint);
  for (std::size_t idx = 0; idx < num_joint; ++idx) {
    double v = global_utility(index_helper.joint_from_index(idx));
    if (!std::isfinite(v))
      throw std::invalid_argument("wlu: non-finite global utility");
    global[idx] = v;
  }

  std::vector<std::vector<double>> payoffs(
      action_counts.size(), std::vector<double>(num_joint, 0.0));
  for (std::size_t idx = 0; idx < num_joint; ++idx) {
    JointAction joint = index_helper.joint_from_index(idx);
    for (int i = 0; i < n; ++i) {
      JointAction ref = joint;
      ref.actions[static_cast<std::size_t>(i)] =
          reference_actions[static_cast<std::size_t>(i)];
      payoffs[static_cast<std::size_t>(i)][idx] =
          global[idx] - global[index_helper.joint_index(ref)];
    }
  }
  return Game(std::move(action_counts), std::move(payoffs), std::move(global));
}

/// Brute-force check of the potential identity over every player, joint
/// action, and unilateral deviation pair.
inline bool is_potential_game(
    const Game& game,
    const std::function<double(const JointAction&)>& candidate_potential,
    double tol = 1e-9) {
  std::vector<double> phi(game.num_joint_actions());
  for (std::size_t idx = 0; idx < game.num_joint_actions(); ++idx)
    phi[idx] = candidate_potential(game.joint_from_index(idx));

  for (std::size_t idx = 0; idx < game.num_joint_actions(); ++idx) {
    JointAction joint = game.joint_from_index(idx);
    for (int i = 0; i < game.num_players(); ++i) {
      JointAction dev = joint;
      for (int a = 0; a < game.num_actions(i); ++a) {
        if (a == joint[i]) continue;
        dev.actions[static_cast<std::size_t>(i)] = a;
        std::size_t dev_idx = game.joint_index(dev);
        double du = game.payoff(i, dev) - game.payoff(i, joint);
        double dphi = phi[dev_idx] - phi[idx];
        if (std::abs(du - dphi) > tol) return false;
      }
    }
  }
  return true;
}

// --- JSON interface ---------------------------------------------------------
//
// {
//   "name": "...",                          optional
//   "actions": [["U","D"], ["L","R"]],      labels, one list per player
//   "payoffs": [[...], [...]],              row-major, player 0 slowest
//   "global": [...]                         optional shared tensor
// }

inline Game game_from_json(const nlohmann::json& j) {
  if (!j.contains("actions") || !j.contains("payoffs"))
    throw std::invalid_argument("game json: missing actions or payoffs");
  std::vector<std::vector<std::string>> labels =
      j.at("actions").get<std::vector<std::vector<std::string>>>();
  std::vector<int> counts;
  counts.reserve(labels.size());
  for (const auto& l : labels) counts.push_back(static_cast<int>(l.size()));
  auto payoffs = j.at("payoffs").get<std::vector<std::vector<double>>>();
  std::optional<std::vector<double>> global;
  if (j.contains("global")) global = j.at("global").get<std::vector<double>>();
  std::string name = j.value("name", "");
  return Game(std::move(counts), std::move(payoffs), std::move(global),
              std::move(labels), std::move(name));
}

inline nlohmann::json game_to_json(const Game& game) {
  nlohmann::json j;
  if (!game.name().empty()) j["name"] = game.name();
  if (!game.action_labels().empty()) {
    j["actions"] = game.action_labels();
  } else {
    std::vector<std::vector<std::string>> labels;
    for (int i = 0; i < game.num_players(); ++i) {
      std::vector<std::string> l;
      for (int a = 0; a < game.num_actions(i); ++a)
        l.push_back("a" + std::to_string(a));
      labels.push_back(std::move(l));
    }
    j["actions"] = labels;
  }
  nlohmann::json payoffs = nlohmann::json::array();
  for (int i = 0; i < game.num_players(); ++i) payoffs.push_back(game.payoff_tensor(i));
  j["payoffs"] = std::move(payoffs);
  if (game.has_global()) j["global"] = *game.global_tensor();
  return j;
}

inline Game load_game(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open game file: " + path);
  nlohmann::json j;
  in >> j;
  return game_from_json(j);
}

}  // namespace ekfp::games

#endif  // EKFP_GAMES_HPP
