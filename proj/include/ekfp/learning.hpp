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

#ifndef EKFP_LEARNING_HPP
#define EKFP_LEARNING_HPP

#include <concepts>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ekfp/filters.hpp"
#include "ekfp/games.hpp"
#include "ekfp/rng.hpp"

namespace ekfp::learning {

enum class DecisionRule { kEkfFp, kClassicFp };

inline DecisionRule rule_from_string(const std::string& s) {
  if (s == "ekf-fp") return DecisionRule::kEkfFp;
  if (s == "classic-fp") return DecisionRule::kClassicFp;
  throw std::invalid_argument("unknown decision rule: " + s);
}

inline std::string rule_to_string(DecisionRule r) {
  return r == DecisionRule::kEkfFp ? "ekf-fp" : "classic-fp";
}

/// Per-opponent belief: a Gaussian propensity model or a frequency count,
/// matching the owning agent's decision rule.
using OpponentBelief =
    std::variant<filters::PropensityBelief, filters::FrequencyBelief>;

/// One learner: a decision rule plus one belief per modeled opponent.
/// `opponents` lists the modeled opponents' player indices in increasing
/// order; `beliefs` is parallel to it. Tensor games model every opponent;
/// interaction-structured games (sensor networks) model neighbors only.
struct AgentState {
  int player = 0;
  DecisionRule rule = DecisionRule::kEkfFp;
  std::vector<int> opponents;
  std::vector<OpponentBelief> beliefs;
};

/// Anything the learning loop can play on: a finite set of players and
/// actions, a best response to opponent strategy profiles, realized payoffs,
/// and an optional shared global utility.
template <typename G>
concept GameView =
    requires(const G& g, int player,
             const std::vector<games::MixedStrategy>& opponents,
             const games::JointAction& joint) {
      { g.num_players() } -> std::convertible_to<int>;
      { g.num_actions(player) } -> std::convertible_to<int>;
      { g.best_response(player, opponents) } -> std::convertible_to<int>;
      { g.payoff(player, joint) } -> std::convertible_to<double>;
      { g.has_global() } -> std::convertible_to<bool>;
      { g.global(joint) } -> std::convertible_to<double>;
    };

/// Adapter giving a dense tensor game the GameView member surface.
class TensorGameView {
 public:
  explicit TensorGameView(const games::Game& game) : game_(&game) {}

  int num_players() const { return game_->num_players(); }
  int num_actions(int player) const { return game_->num_actions(player); }
  int best_response(int player,
                    const std::vector<games::MixedStrategy>& opponents) const {
    return games::best_response(*game_, player, opponents);
  }
  double payoff(int player, const games::JointAction& joint) const {
    return game_->payoff(player, joint);
  }
  bool has_global() const { return game_->has_global(); }
  double global(const games::JointAction& joint) const {
    return game_->global(joint);
  }
  const games::Game& game() const { return *game_; }

 private:
  const games::Game* game_;
};

static_assert(GameView<TensorGameView>);

/// Games that expose an interaction graph; agents then model only their
/// graph neighbors instead of every opponent.
template <typename G>
concept NeighborStructured = requires(const G& g) {
  {
    g.neighbors()
  } -> std::convertible_to<const std::vector<std::vector<int>>&>;
};

/// Fresh agents at the standard initialization: EKF beliefs at the
/// standard-normal prior, frequency beliefs at unit pseudo-counts.
/// Every opponent is modeled.
inline std::vector<AgentState> make_agents(
    const std::vector<int>& action_counts,
    const std::vector<DecisionRule>& rules) {
  if (rules.size() != action_counts.size())
    throw std::invalid_argument("make_agents: one rule per player");
  const int n = static_cast<int>(action_counts.size());
  std::vector<AgentState> agents;
  agents.reserve(action_counts.size());
  for (int i = 0; i < n; ++i) {
    AgentState a;
    a.player = i;
    a.rule = rules[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      int m = action_counts[static_cast<std::size_t>(j)];
      a.opponents.push_back(j);
      if (a.rule == DecisionRule::kEkfFp)
        a.beliefs.emplace_back(filters::PropensityBelief::initial(m));
      else
        a.beliefs.emplace_back(filters::FrequencyBelief::ones(m));
    }
    agents.push_back(std::move(a));
  }
  return agents;
}

/// Fresh agents for a game view. Neighbor-structured games get beliefs over
/// graph neighbors only; everything else models all opponents.
template <GameView G>
std::vector<AgentState> make_agents(const G& game,
                                    const std::vector<DecisionRule>& rules) {
  const int n = game.num_players();
  if (static_cast<int>(rules.size()) != n)
    throw std::invalid_argument("make_agents: one rule per player");
  std::vector<AgentState> agents;
  agents.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    AgentState a;
    a.player = i;
    a.rule = rules[static_cast<std::size_t>(i)];
    if constexpr (NeighborStructured<G>) {
      a.opponents = game.neighbors()[static_cast<std::size_t>(i)];
    } else {
      for (int j = 0; j < n; ++j)
        if (j != i) a.opponents.push_back(j);
    }
    for (int j : a.opponents) {
      int m = game.num_actions(j);
      if (a.rule == DecisionRule::kEkfFp)
        a.beliefs.emplace_back(filters::PropensityBelief::initial(m));
      else
        a.beliefs.emplace_back(filters::FrequencyBelief::ones(m));
    }
    agents.push_back(std::move(a));
  }
  return agents;
}

/// Draws fresh starting beliefs so replications explore different initial
/// joint actions: EKF means sampled from the standard-normal prior, frequency
/// weights from (0, 1].
inline void randomize_agents(std::vector<AgentState>& agents,
                             RandomStream& rng) {
  for (AgentState& agent : agents) {
    for (OpponentBelief& belief : agent.beliefs) {
      if (auto* ekf = std::get_if<filters::PropensityBelief>(&belief)) {
        for (Eigen::Index k = 0; k < ekf->mean.size(); ++k)
          ekf->mean(k) = rng.normal(0.0, 1.0);
      } else {
        auto& freq = std::get<filters::FrequencyBelief>(belief);
        for (double& w : freq.weights) w = rng.uniform_positive(1.0);
      }
    }
  }
}

/// Opponent strategy estimates implied by the agent's current beliefs,
/// one per modeled opponent, parallel to `agent.opponents`.
inline std::vector<games::MixedStrategy> estimated_strategies(
    const AgentState& agent, double tau) {
  std::vector<games::MixedStrategy> out;
  out.reserve(agent.beliefs.size());
  for (const OpponentBelief& belief : agent.beliefs) {
    if (const auto* ekf = std::get_if<filters::PropensityBelief>(&belief))
      out.push_back(filters::strategy_from_propensity(ekf->mean, tau));
    else
      out.push_back(
          filters::fp_strategy(std::get<filters::FrequencyBelief>(belief)));
  }
  return out;
}

struct StepResult {
  games::JointAction joint;
  // estimated[i] holds the opponent strategy profile player i best-responded
  // to this step, one entry per opponent in increasing player order (own index
  // skipped). Unmodeled opponents appear as the uniform strategy; games with
  // an interaction graph ignore those placeholder entries.
  std::vector<std::vector<games::MixedStrategy>> estimated;
};

namespace detail {

template <GameView G>
void check_agents(const G& game, const std::vector<AgentState>& agents) {
  if (static_cast<int>(agents.size()) != game.num_players())
    throw std::invalid_argument("step: one agent per player");
  for (int i = 0; i < game.num_players(); ++i) {
    const AgentState& a = agents[static_cast<std::size_t>(i)];
    if (a.player != i)
      throw std::invalid_argument("step: agents must be in player order");
    if (a.beliefs.size() != a.opponents.size())
      throw std::invalid_argument("step: one belief per modeled opponent");
    int prev = -1;
    for (std::size_t slot = 0; slot < a.opponents.size(); ++slot) {
      int j = a.opponents[slot];
      if (j <= prev || j == i || j >= game.num_players())
        throw std::invalid_argument(
            "step: modeled opponents must be increasing player indices");
      prev = j;
      const OpponentBelief& b = a.beliefs[slot];
      int dim = std::holds_alternative<filters::PropensityBelief>(b)
                    ? std::get<filters::PropensityBelief>(b).size()
                    : std::get<filters::FrequencyBelief>(b).size();
      if (dim != game.num_actions(j))
        throw std::invalid_argument("step: belief dimension mismatch");
    }
  }
}

// Expands modeled-opponent estimates into the dense per-opponent profile the
// best response expects, filling unmodeled slots with the uniform strategy.
template <GameView G>
std::vector<games::MixedStrategy> dense_profile(
    const G& game, const AgentState& agent,
    std::vector<games::MixedStrategy> modeled) {
  const int n = game.num_players();
  std::vector<games::MixedStrategy> out;
  out.reserve(static_cast<std::size_t>(n - 1));
  std::size_t slot = 0;
  for (int j = 0; j < n; ++j) {
    if (j == agent.player) continue;
    if (slot < agent.opponents.size() && agent.opponents[slot] == j)
      out.push_back(std::move(modeled[slot++]));
    else
      out.push_back(games::MixedStrategy::uniform(game.num_actions(j)));
  }
  return out;
}

}  // namespace detail

/// One simultaneous-move iteration. Every agent advances its Gaussian
/// beliefs (time update), forms opponent strategy estimates, best-responds,
/// then all agents observe the realized joint action and run their
/// measurement updates. Actions are chosen from pre-step beliefs only.
/// The observation-noise perturbation for player i's model of opponent j at
/// this iteration is drawn from a substream keyed by (seed, i, j, iteration),
/// so traces are reproducible regardless of update order.
template <GameView G>
StepResult step(const G& game, std::vector<AgentState>& agents,
                const filters::FilterParams& params, std::uint64_t seed,
                std::uint64_t iteration) {
  params.validate();
  detail::check_agents(game, agents);
  const int n = game.num_players();

  StepResult result;
  result.estimated.reserve(agents.size());
  result.joint.actions.resize(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    AgentState& agent = agents[static_cast<std::size_t>(i)];
    if (agent.rule == DecisionRule::kEkfFp)
      for (OpponentBelief& belief : agent.beliefs)
        belief = filters::predict(std::get<filters::PropensityBelief>(belief),
                                  params);
    result.estimated.push_back(detail::dense_profile(
        game, agent, estimated_strategies(agent, params.tau)));
    result.joint.actions[static_cast<std::size_t>(i)] =
        game.best_response(i, result.estimated.back());
  }

  for (int i = 0; i < n; ++i) {
    AgentState& agent = agents[static_cast<std::size_t>(i)];
    for (std::size_t slot = 0; slot < agent.opponents.size(); ++slot) {
      int j = agent.opponents[slot];
      OpponentBelief& belief = agent.beliefs[slot];
      int observed = result.joint[j];
      if (agent.rule == DecisionRule::kEkfFp) {
        RandomStream noise(ekfp::derive_seed(
            seed, {kTagObservationNoise, static_cast<std::uint64_t>(i),
                   static_cast<std::uint64_t>(j), iteration}));
        double eps = filters::sample_epsilon(params, noise);
        belief = filters::update(std::get<filters::PropensityBelief>(belief),
                                 observed, params, eps);
      } else {
        belief = filters::fp_update(
            std::get<filters::FrequencyBelief>(belief), observed);
      }
    }
  }
  return result;
}

struct IterationRecord {
  games::JointAction joint;
  std::vector<std::vector<games::MixedStrategy>> estimated;
  std::vector<double> utilities;
  std::optional<double> global;
};

struct EpisodeTrace {
  std::vector<IterationRecord> iterations;

  int size() const { return static_cast<int>(iterations.size()); }
};

struct EpisodeConfig {
  int iterations = 50;
  std::uint64_t seed = 0;
  std::vector<DecisionRule> rules;  // empty: every player runs EKF
  filters::FilterParams params;

  void validate() const {
    if (iterations < 0)
      throw std::invalid_argument("episode: iterations must be >= 0");
    params.validate();
  }
};

/// Runs `config.iterations` steps starting from the supplied agents
/// (mutating them). Deterministic given (agents, seed).
template <GameView G>
EpisodeTrace run_episode(const G& game, const EpisodeConfig& config,
                         std::vector<AgentState>& agents) {
  config.validate();
  detail::check_agents(game, agents);
  EpisodeTrace trace;
  trace.iterations.reserve(static_cast<std::size_t>(config.iterations));
  for (int t = 0; t < config.iterations; ++t) {
    StepResult step_result = step(game, agents, config.params, config.seed,
                                  static_cast<std::uint64_t>(t));
    IterationRecord rec;
    rec.joint = std::move(step_result.joint);
    rec.estimated = std::move(step_result.estimated);
    for (int i = 0; i < game.num_players(); ++i)
      rec.utilities.push_back(game.payoff(i, rec.joint));
    if (game.has_global()) rec.global = game.global(rec.joint);
    trace.iterations.push_back(std::move(rec));
  }
  return trace;
}

/// Runs an episode from the standard initialization.
template <GameView G>
EpisodeTrace run_episode(const G& game, const EpisodeConfig& config) {
  config.validate();
  std::vector<DecisionRule> rules = config.rules;
  if (rules.empty())
    rules.assign(static_cast<std::size_t>(game.num_players()),
                 DecisionRule::kEkfFp);
  else if (static_cast<int>(rules.size()) != game.num_players())
    throw std::invalid_argument("episode: one rule per player");
  std::vector<AgentState> agents = make_agents(game, rules);
  return run_episode(game, config, agents);
}

/// First iteration from which the joint action never changes again, provided
/// that stable tail is at least `window` long; nullopt otherwise.
inline std::optional<int> detect_convergence(const EpisodeTrace& trace,
                                             int window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  const int n = trace.size();
  if (n == 0) return std::nullopt;
  int start = n - 1;
  while (start > 0 &&
         trace.iterations[static_cast<std::size_t>(start - 1)].joint ==
             trace.iterations[static_cast<std::size_t>(n - 1)].joint)
    --start;
  if (n - start < window) return std::nullopt;
  return start;
}

// --- External interfaces -----------------------------------------------------

inline EpisodeConfig episode_config_from_json(const nlohmann::json& j) {
  EpisodeConfig c;
  c.iterations = j.value("iterations", c.iterations);
  c.seed = j.value("seed", c.seed);
  if (j.contains("rules"))
    for (const auto& r : j.at("rules"))
      c.rules.push_back(rule_from_string(r.get<std::string>()));
  if (j.contains("params"))
    c.params = filters::params_from_json(j.at("params"));
  c.validate();
  return c;
}

/// One row per iteration: seed, iteration, joint action joined by '-',
/// per-player realized utility, global utility (empty when undefined).
inline void trace_to_csv(std::ostream& out, const EpisodeTrace& trace,
                         std::uint64_t seed, bool header = true) {
  if (header) {
    out << "seed,iteration,joint_action";
    if (!trace.iterations.empty())
      for (std::size_t i = 0; i < trace.iterations[0].utilities.size(); ++i)
        out << ",utility_p" << i;
    out << ",global_utility\n";
  }
  for (int t = 0; t < trace.size(); ++t) {
    const IterationRecord& rec = trace.iterations[static_cast<std::size_t>(t)];
    out << seed << ',' << t << ',';
    for (int i = 0; i < rec.joint.size(); ++i) {
      if (i) out << '-';
      out << rec.joint[i];
    }
    for (double u : rec.utilities) out << ',' << u;
    out << ',';
    if (rec.global) out << *rec.global;
    out << '\n';
  }
}

}  // namespace ekfp::learning

#endif  // EKFP_LEARNING_HPP
