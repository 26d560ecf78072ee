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

#ifndef EKFP_EXPERIMENTS_HPP
#define EKFP_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ekfp/filters.hpp"
#include "ekfp/games.hpp"
#include "ekfp/learning.hpp"
#include "ekfp/rng.hpp"
#include "ekfp/sensornet.hpp"

namespace ekfp::experiments {

// --- Strategy tracking -------------------------------------------------------

enum class TrackingKind { kSinusoidal, kAbrupt };

inline TrackingKind tracking_kind_from_string(const std::string& s) {
  if (s == "sinusoidal") return TrackingKind::kSinusoidal;
  if (s == "abrupt") return TrackingKind::kAbrupt;
  throw std::invalid_argument("unknown tracking kind: " + s);
}

inline std::string tracking_kind_to_string(TrackingKind k) {
  return k == TrackingKind::kSinusoidal ? "sinusoidal" : "abrupt";
}

/// True mixed strategy of the tracked player at iteration t of n, for
/// 1 <= t <= n. The first component follows either a full cosine cycle,
/// (cos(2 pi t / n) + 1)/2, or an abrupt profile that plays the first action
/// with certainty in the first and last quarters of the run and the second
/// action with certainty in between.
inline games::MixedStrategy tracking_truth(TrackingKind kind, int t, int n) {
  if (n < 1 || t < 1 || t > n)
    throw std::invalid_argument("tracking_truth: need 1 <= t <= n");
  double p;
  if (kind == TrackingKind::kSinusoidal)
    p = (std::cos(2.0 * std::numbers::pi * t / n) + 1.0) / 2.0;
  else
    p = (4 * t <= n || 4 * t > 3 * n) ? 1.0 : 0.0;
  games::MixedStrategy s;
  s.probs = {p, 1.0 - p};
  return s;
}

/// Materialized truth sequence for one tracking run.
struct TrackingScenario {
  TrackingKind kind = TrackingKind::kSinusoidal;
  int length = 100;
  std::vector<games::MixedStrategy> truth;  // truth[t-1] for iteration t
};

inline TrackingScenario make_tracking_scenario(TrackingKind kind, int n) {
  if (n < 1) throw std::invalid_argument("tracking scenario: length >= 1");
  TrackingScenario sc;
  sc.kind = kind;
  sc.length = n;
  sc.truth.reserve(static_cast<std::size_t>(n));
  for (int t = 1; t <= n; ++t) sc.truth.push_back(tracking_truth(kind, t, n));
  return sc;
}

struct TrackingResult {
  std::vector<double> true_prob;       // first component of the true strategy
  std::vector<double> estimated_prob;  // first component of the estimate
  std::vector<double> abs_error;       // |estimated - true| per iteration

  double mean_abs_error() const {
    double sum = 0.0;
    for (double e : abs_error) sum += e;
    return abs_error.empty() ? 0.0 : sum / static_cast<double>(abs_error.size());
  }
};

/// Tracks one opponent through a scenario: at each iteration the filter
/// advances its time update, commits to the predicted strategy estimate,
/// then observes an action sampled from the true strategy and runs the
/// measurement update. The recorded error compares the pre-observation
/// estimate with the truth. Deterministic in (scenario, params, seed).
inline TrackingResult run_tracking(const TrackingScenario& scenario,
                                   const filters::FilterParams& params,
                                   std::uint64_t seed) {
  params.validate();
  if (static_cast<int>(scenario.truth.size()) != scenario.length)
    throw std::invalid_argument("run_tracking: scenario truth incomplete");
  RandomStream actions(derive_seed(seed, {kTagTrackedAction}));
  RandomStream noise(derive_seed(seed, {kTagObservationNoise}));
  filters::PropensityBelief belief = filters::PropensityBelief::initial(2);
  TrackingResult out;
  out.true_prob.reserve(static_cast<std::size_t>(scenario.length));
  out.estimated_prob.reserve(static_cast<std::size_t>(scenario.length));
  out.abs_error.reserve(static_cast<std::size_t>(scenario.length));
  for (int t = 1; t <= scenario.length; ++t) {
    const games::MixedStrategy& truth =
        scenario.truth[static_cast<std::size_t>(t - 1)];
    belief = filters::predict(belief, params);
    games::MixedStrategy estimate =
        filters::strategy_from_propensity(belief.mean, params.tau);
    int action = actions.categorical(truth.probs);
    double eps = filters::sample_epsilon(params, noise);
    belief = filters::update(belief, action, params, eps);
    out.true_prob.push_back(truth.probs[0]);
    out.estimated_prob.push_back(estimate.probs[0]);
    out.abs_error.push_back(std::abs(estimate.probs[0] - truth.probs[0]));
  }
  return out;
}

// --- Noise-parameter sweep ---------------------------------------------------

/// n points spaced evenly in log scale across [lo, hi]; n = 1 yields {lo}.
inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo))
    throw std::invalid_argument("log_grid: need 0 < lo <= hi");
  if (n < 1) throw std::invalid_argument("log_grid: need n >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  if (n == 1) {
    out.push_back(lo);
    return out;
  }
  double log_lo = std::log(lo);
  double log_hi = std::log(hi);
  for (int i = 0; i < n; ++i)
    out.push_back(std::exp(log_lo + (log_hi - log_lo) * i / (n - 1)));
  return out;
}

struct SweepConfig {
  std::vector<double> q_grid = log_grid(1e-4, 1.0, 20);
  std::vector<double> r_grid = log_grid(1e-4, 1.0, 20);
  int reps = 100;
  int length = 100;  // iterations per tracking run
  std::uint64_t seed = 0;
  filters::FilterParams params;  // q and r are overridden per cell

  void validate() const {
    if (reps < 1) throw std::invalid_argument("sweep: reps must be >= 1");
    if (length < 1) throw std::invalid_argument("sweep: length must be >= 1");
    if (q_grid.empty() || r_grid.empty())
      throw std::invalid_argument("sweep: grids must be nonempty");
    for (double v : q_grid)
      if (!(v >= 1e-4 && v <= 1.0))
        throw std::invalid_argument("sweep: q grid must lie in [1e-4, 1]");
    for (double v : r_grid)
      if (!(v >= 1e-4 && v <= 1.0))
        throw std::invalid_argument("sweep: r grid must lie in [1e-4, 1]");
  }
};

struct SweepCell {
  double q = 0.0;
  double r = 0.0;
  double error_sinusoidal = 0.0;
  double error_abrupt = 0.0;
  double error_combined = 0.0;  // equal-weight mean of the two scenarios
};

struct SweepResult {
  std::vector<double> q_grid;
  std::vector<double> r_grid;
  std::vector<SweepCell> cells;  // row-major: q outer, r inner

  const SweepCell& cell(int qi, int ri) const {
    return cells[static_cast<std::size_t>(qi) * r_grid.size() +
                 static_cast<std::size_t>(ri)];
  }
};

/// Mean absolute tracking error for every (q, r) cell, averaged over both
/// scenario kinds and all replications with equal scenario weight. Each
/// (cell, scenario, replication) draws an independent substream, so cells
/// may be evaluated in any order.
inline SweepResult run_sweep(const SweepConfig& config) {
  config.validate();
  const TrackingScenario scenarios[2] = {
      make_tracking_scenario(TrackingKind::kSinusoidal, config.length),
      make_tracking_scenario(TrackingKind::kAbrupt, config.length)};
  SweepResult result;
  result.q_grid = config.q_grid;
  result.r_grid = config.r_grid;
  result.cells.reserve(config.q_grid.size() * config.r_grid.size());
  for (std::size_t qi = 0; qi < config.q_grid.size(); ++qi) {
    for (std::size_t ri = 0; ri < config.r_grid.size(); ++ri) {
      filters::FilterParams params = config.params;
      params.q = config.q_grid[qi];
      params.r = config.r_grid[ri];
      params.validate();
      SweepCell cell;
      cell.q = params.q;
      cell.r = params.r;
      double errors[2] = {0.0, 0.0};
      for (int sc = 0; sc < 2; ++sc) {
        for (int k = 0; k < config.reps; ++k) {
          std::uint64_t rep_seed = derive_seed(
              config.seed,
              {kTagReplication, static_cast<std::uint64_t>(qi),
               static_cast<std::uint64_t>(ri), static_cast<std::uint64_t>(sc),
               static_cast<std::uint64_t>(k)});
          errors[sc] +=
              run_tracking(scenarios[sc], params, rep_seed).mean_abs_error();
        }
        errors[sc] /= config.reps;
      }
      cell.error_sinusoidal = errors[0];
      cell.error_abrupt = errors[1];
      cell.error_combined = (errors[0] + errors[1]) / 2.0;
      result.cells.push_back(cell);
    }
  }
  return result;
}

// --- Strategic-form comparisons ----------------------------------------------

/// How replications initialize their beliefs:
///  - default: the standard prior, so replications differ only through
///    observation noise;
///  - sampled: beliefs drawn fresh per replication, exploring different
///    initial joint actions;
///  - miscoordination: asymmetric weights making player i initially expect
///    every opponent to favor action i, which locks classic fictitious play
///    in the coordination game's miscoordination cycle.
enum class InitStyle { kDefault, kSampled, kMiscoordination };

inline InitStyle init_style_from_string(const std::string& s) {
  if (s == "default") return InitStyle::kDefault;
  if (s == "sampled") return InitStyle::kSampled;
  if (s == "miscoordination") return InitStyle::kMiscoordination;
  throw std::invalid_argument("unknown init style: " + s);
}

inline std::string init_style_to_string(InitStyle s) {
  switch (s) {
    case InitStyle::kDefault: return "default";
    case InitStyle::kSampled: return "sampled";
    default: return "miscoordination";
  }
}

namespace detail {

/// Player i's belief about each opponent starts favoring action (i mod m)
/// with weight 1 against 0.5 elsewhere; propensity means use the weight
/// logs so both rules imply the same initial strategy estimates.
inline void apply_miscoordination(std::vector<learning::AgentState>& agents) {
  for (learning::AgentState& agent : agents) {
    for (learning::OpponentBelief& belief : agent.beliefs) {
      if (auto* ekf = std::get_if<filters::PropensityBelief>(&belief)) {
        int m = ekf->size();
        for (int k = 0; k < m; ++k)
          ekf->mean(k) = k == agent.player % m ? 0.0 : std::log(0.5);
      } else {
        auto& freq = std::get<filters::FrequencyBelief>(belief);
        int m = freq.size();
        for (int k = 0; k < m; ++k)
          freq.weights[static_cast<std::size_t>(k)] =
              k == agent.player % m ? 1.0 : 0.5;
      }
    }
  }
}

}  // namespace detail

struct GameComparisonConfig {
  learning::DecisionRule rule = learning::DecisionRule::kEkfFp;
  InitStyle init = InitStyle::kSampled;
  int reps = 50;
  int iterations = 50;
  int window = 10;
  std::uint64_t seed = 0;
  filters::FilterParams params;
  // Optional joint action whose play frequency is reported separately.
  std::optional<games::JointAction> target;

  void validate() const {
    if (reps < 1) throw std::invalid_argument("comparison: reps must be >= 1");
    if (iterations < 1)
      throw std::invalid_argument("comparison: iterations must be >= 1");
    if (window < 1)
      throw std::invalid_argument("comparison: window must be >= 1");
    params.validate();
  }
};

struct GameComparisonResult {
  // Per-iteration fraction of replications whose joint action is a pure
  // Nash equilibrium of the game.
  std::vector<double> nash_frequency;
  // Per-iteration fraction playing the configured target joint action;
  // empty when no target was set.
  std::vector<double> target_frequency;
  // Per-iteration mean over replications of the players' average payoff.
  std::vector<double> mean_payoff;
  // detect_convergence output per replication.
  std::vector<std::optional<int>> convergence;
};

/// Runs seeded replications of one decision rule on a strategic-form game
/// and aggregates per-iteration statistics across them.
inline GameComparisonResult run_game_comparison(
    const games::Game& game, const GameComparisonConfig& config) {
  config.validate();
  if (config.target) {
    if (config.target->size() != game.num_players())
      throw std::invalid_argument("comparison: target joint action shape");
    for (int i = 0; i < game.num_players(); ++i)
      if ((*config.target)[i] < 0 || (*config.target)[i] >= game.num_actions(i))
        throw std::invalid_argument("comparison: target action out of range");
  }
  learning::TensorGameView view(game);
  const auto nash_joints = games::pure_nash_equilibria(game);
  std::vector<char> is_nash(game.num_joint_actions(), 0);
  for (const games::JointAction& ne : nash_joints)
    is_nash[game.joint_index(ne)] = 1;

  auto n = static_cast<std::size_t>(config.iterations);
  GameComparisonResult result;
  result.nash_frequency.assign(n, 0.0);
  if (config.target) result.target_frequency.assign(n, 0.0);
  result.mean_payoff.assign(n, 0.0);

  std::vector<learning::DecisionRule> rules(
      static_cast<std::size_t>(game.num_players()), config.rule);
  for (int k = 0; k < config.reps; ++k) {
    std::uint64_t rep_seed = derive_seed(
        config.seed, {kTagReplication, static_cast<std::uint64_t>(k)});
    auto agents = learning::make_agents(view, rules);
    if (config.init == InitStyle::kSampled) {
      RandomStream init_rng(derive_seed(rep_seed, {kTagInitialBelief}));
      learning::randomize_agents(agents, init_rng);
    } else if (config.init == InitStyle::kMiscoordination) {
      detail::apply_miscoordination(agents);
    }
    learning::EpisodeConfig episode;
    episode.iterations = config.iterations;
    episode.seed = rep_seed;
    episode.params = config.params;
    auto trace = learning::run_episode(view, episode, agents);
    for (int t = 0; t < trace.size(); ++t) {
      const auto& rec = trace.iterations[static_cast<std::size_t>(t)];
      auto ts = static_cast<std::size_t>(t);
      if (is_nash[game.joint_index(rec.joint)]) result.nash_frequency[ts] += 1.0;
      if (config.target && rec.joint == *config.target)
        result.target_frequency[ts] += 1.0;
      double payoff = 0.0;
      for (double u : rec.utilities) payoff += u;
      result.mean_payoff[ts] += payoff / game.num_players();
    }
    result.convergence.push_back(
        learning::detect_convergence(trace, config.window));
  }
  for (std::size_t t = 0; t < n; ++t) {
    result.nash_frequency[t] /= config.reps;
    if (config.target) result.target_frequency[t] /= config.reps;
    result.mean_payoff[t] /= config.reps;
  }
  return result;
}

// --- Sensor-network comparisons ----------------------------------------------

struct SensorComparisonConfig {
  sensornet::ScenarioSpec spec;
  int reps = 30;
  int iterations = 50;
  int window = 10;
  std::uint64_t seed = 0;
  filters::FilterParams params;

  void validate() const {
    if (reps < 1) throw std::invalid_argument("comparison: reps must be >= 1");
    if (iterations < 1)
      throw std::invalid_argument("comparison: iterations must be >= 1");
    if (window < 1)
      throw std::invalid_argument("comparison: window must be >= 1");
    params.validate();
  }
};

struct SensorComparisonResult {
  // Per-iteration mean over replications of global utility divided by the
  // always-on baseline of that replication's scenario.
  std::vector<double> ekf_normalized;
  std::vector<double> classic_normalized;
  std::vector<std::optional<int>> ekf_convergence;
  std::vector<std::optional<int>> classic_convergence;
};

/// Median convergence step with non-converged replications counted at the
/// episode length, which lower-bounds their true convergence step.
inline double median_convergence(
    const std::vector<std::optional<int>>& convergence, int iterations) {
  if (convergence.empty())
    throw std::invalid_argument("median_convergence: empty input");
  std::vector<double> values;
  values.reserve(convergence.size());
  for (const auto& c : convergence)
    values.push_back(c ? static_cast<double>(*c)
                       : static_cast<double>(iterations));
  std::sort(values.begin(), values.end());
  std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return (values[mid - 1] + values[mid]) / 2.0;
}

/// Runs both decision rules on the same freshly drawn scenario per
/// replication and reports normalized global utility and convergence.
inline SensorComparisonResult run_sensor_comparison(
    const SensorComparisonConfig& config) {
  config.validate();
  auto n = static_cast<std::size_t>(config.iterations);
  SensorComparisonResult result;
  result.ekf_normalized.assign(n, 0.0);
  result.classic_normalized.assign(n, 0.0);
  for (int k = 0; k < config.reps; ++k) {
    std::uint64_t rep_seed = derive_seed(
        config.seed, {kTagReplication, static_cast<std::uint64_t>(k)});
    sensornet::SensorScenario scenario =
        sensornet::generate_scenario(config.spec, rep_seed);
    sensornet::SensorGame game(scenario);
    double baseline = sensornet::always_on_utility(scenario);
    for (learning::DecisionRule rule :
         {learning::DecisionRule::kEkfFp, learning::DecisionRule::kClassicFp}) {
      auto agents = learning::make_agents(
          game, std::vector<learning::DecisionRule>(
                    static_cast<std::size_t>(game.num_players()), rule));
      learning::EpisodeConfig episode;
      episode.iterations = config.iterations;
      episode.seed = rep_seed;
      episode.params = config.params;
      auto trace = learning::run_episode(game, episode, agents);
      bool ekf = rule == learning::DecisionRule::kEkfFp;
      auto& series = ekf ? result.ekf_normalized : result.classic_normalized;
      for (int t = 0; t < trace.size(); ++t) {
        double g = *trace.iterations[static_cast<std::size_t>(t)].global;
        series[static_cast<std::size_t>(t)] +=
            baseline > 0.0 ? g / baseline : 1.0;
      }
      auto& convergence =
          ekf ? result.ekf_convergence : result.classic_convergence;
      convergence.push_back(
          learning::detect_convergence(trace, config.window));
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    result.ekf_normalized[t] /= config.reps;
    result.classic_normalized[t] /= config.reps;
  }
  return result;
}

// --- External interfaces -----------------------------------------------------

struct TrackingConfig {
  TrackingKind kind = TrackingKind::kSinusoidal;
  int length = 100;
  std::uint64_t seed = 0;
  filters::FilterParams params;
};

inline TrackingConfig tracking_config_from_json(const nlohmann::json& j) {
  TrackingConfig c;
  if (j.contains("kind"))
    c.kind = tracking_kind_from_string(j.at("kind").get<std::string>());
  c.length = j.value("length", c.length);
  c.seed = j.value("seed", c.seed);
  if (j.contains("params"))
    c.params = filters::params_from_json(j.at("params"));
  if (c.length < 1)
    throw std::invalid_argument("tracking: length must be >= 1");
  c.params.validate();
  return c;
}

inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  SweepConfig c;
  if (j.contains("q_grid"))
    c.q_grid = j.at("q_grid").get<std::vector<double>>();
  else
    c.q_grid = log_grid(j.value("q_min", 1e-4), j.value("q_max", 1.0),
                        j.value("q_points", 20));
  if (j.contains("r_grid"))
    c.r_grid = j.at("r_grid").get<std::vector<double>>();
  else
    c.r_grid = log_grid(j.value("r_min", 1e-4), j.value("r_max", 1.0),
                        j.value("r_points", 20));
  c.reps = j.value("reps", c.reps);
  c.length = j.value("length", c.length);
  c.seed = j.value("seed", c.seed);
  if (j.contains("params"))
    c.params = filters::params_from_json(j.at("params"));
  c.validate();
  return c;
}

inline GameComparisonConfig game_comparison_config_from_json(
    const nlohmann::json& j) {
  GameComparisonConfig c;
  if (j.contains("rule"))
    c.rule = learning::rule_from_string(j.at("rule").get<std::string>());
  if (j.contains("init"))
    c.init = init_style_from_string(j.at("init").get<std::string>());
  c.reps = j.value("reps", c.reps);
  c.iterations = j.value("iterations", c.iterations);
  c.window = j.value("window", c.window);
  c.seed = j.value("seed", c.seed);
  if (j.contains("params"))
    c.params = filters::params_from_json(j.at("params"));
  if (j.contains("target")) {
    games::JointAction target;
    for (const auto& a : j.at("target"))
      target.actions.push_back(a.get<int>());
    c.target = std::move(target);
  }
  c.validate();
  return c;
}

inline SensorComparisonConfig sensor_comparison_config_from_json(
    const nlohmann::json& j) {
  SensorComparisonConfig c;
  c.spec.n_sensors = j.value("n_sensors", c.spec.n_sensors);
  c.spec.n_events = j.value("n_events", c.spec.n_events);
  c.spec.slots = j.value("slots", c.spec.slots);
  c.spec.sense_range = j.value("sense_range", c.spec.sense_range);
  c.spec.comm_range = j.value("comm_range", c.spec.comm_range);
  c.spec.day_length = j.value("day_length", c.spec.day_length);
  c.reps = j.value("reps", c.reps);
  c.iterations = j.value("iterations", c.iterations);
  c.window = j.value("window", c.window);
  c.seed = j.value("seed", c.seed);
  if (j.contains("params"))
    c.params = filters::params_from_json(j.at("params"));
  c.validate();
  return c;
}

namespace detail {

// Bumps a caller-owned stream to round-trip double precision for the
// writer's lifetime and restores the previous setting on exit, so emitted
// values re-parse to the exact doubles that were computed.
class CsvPrecisionGuard {
 public:
  explicit CsvPrecisionGuard(std::ostream& out)
      : out_(out),
        previous_(out.precision(std::numeric_limits<double>::max_digits10)) {}
  ~CsvPrecisionGuard() { out_.precision(previous_); }
  CsvPrecisionGuard(const CsvPrecisionGuard&) = delete;
  CsvPrecisionGuard& operator=(const CsvPrecisionGuard&) = delete;

 private:
  std::ostream& out_;
  std::streamsize previous_;
};

}  // namespace detail

inline void tracking_to_csv(std::ostream& out, const TrackingResult& result) {
  detail::CsvPrecisionGuard guard(out);
  out << "iteration,true_prob,estimated_prob,abs_error\n";
  for (std::size_t t = 0; t < result.abs_error.size(); ++t)
    out << (t + 1) << ',' << result.true_prob[t] << ','
        << result.estimated_prob[t] << ',' << result.abs_error[t] << '\n';
}

inline void sweep_to_csv(std::ostream& out, const SweepResult& result) {
  detail::CsvPrecisionGuard guard(out);
  out << "q,r,error_sinusoidal,error_abrupt,error_combined\n";
  for (const SweepCell& cell : result.cells)
    out << cell.q << ',' << cell.r << ',' << cell.error_sinusoidal << ','
        << cell.error_abrupt << ',' << cell.error_combined << '\n';
}

inline void game_comparison_to_csv(std::ostream& out,
                                   const GameComparisonResult& result) {
  detail::CsvPrecisionGuard guard(out);
  bool with_target = !result.target_frequency.empty();
  out << "iteration,nash_frequency,target_frequency,mean_payoff\n";
  for (std::size_t t = 0; t < result.nash_frequency.size(); ++t) {
    out << (t + 1) << ',' << result.nash_frequency[t] << ',';
    if (with_target) out << result.target_frequency[t];
    out << ',' << result.mean_payoff[t] << '\n';
  }
}

inline void sensor_comparison_to_csv(std::ostream& out,
                                     const SensorComparisonResult& result) {
  detail::CsvPrecisionGuard guard(out);
  out << "iteration,ekf_normalized_utility,classic_normalized_utility\n";
  for (std::size_t t = 0; t < result.ekf_normalized.size(); ++t)
    out << (t + 1) << ',' << result.ekf_normalized[t] << ','
        << result.classic_normalized[t] << '\n';
}

}  // namespace ekfp::experiments

#endif  // EKFP_EXPERIMENTS_HPP
