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

// Experiment driver: each subcommand loads a JSON config, runs the matching
// experiment deterministically, and writes CSV series plus a JSON summary
// into the output directory. --plot-data adds headerless space-separated
// .dat files ready for gnuplot.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ekfp/experiments.hpp"
#include "ekfp/games.hpp"
#include "ekfp/learning.hpp"

namespace fs = std::filesystem;

namespace {

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write file: " + file.string());
  out << text;
}

nlohmann::json convergence_json(
    const std::vector<std::optional<int>>& convergence) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : convergence) {
    if (c)
      arr.push_back(*c);
    else
      arr.push_back(nullptr);
  }
  return arr;
}

int count_converged(const std::vector<std::optional<int>>& convergence) {
  int n = 0;
  for (const auto& c : convergence)
    if (c) ++n;
  return n;
}

void run_track(const nlohmann::json& config, const fs::path& out, bool plot) {
  auto c = ekfp::experiments::tracking_config_from_json(config);
  auto scenario = ekfp::experiments::make_tracking_scenario(c.kind, c.length);
  auto result = ekfp::experiments::run_tracking(scenario, c.params, c.seed);

  std::ostringstream csv;
  ekfp::experiments::tracking_to_csv(csv, result);
  write_text(out / "tracking.csv", csv.str());

  nlohmann::json summary = {
      {"kind", ekfp::experiments::tracking_kind_to_string(c.kind)},
      {"length", c.length},
      {"seed", c.seed},
      {"mean_abs_error", result.mean_abs_error()},
      {"final_abs_error", result.abs_error.back()}};
  write_text(out / "summary.json", summary.dump(2) + "\n");

  if (plot) {
    std::ostringstream dat;
    for (std::size_t t = 0; t < result.abs_error.size(); ++t)
      dat << (t + 1) << ' ' << result.true_prob[t] << ' '
          << result.estimated_prob[t] << ' ' << result.abs_error[t] << '\n';
    write_text(out / "tracking.dat", dat.str());
  }
}

void run_sweep(const nlohmann::json& config, const fs::path& out, bool plot) {
  auto c = ekfp::experiments::sweep_config_from_json(config);
  auto result = ekfp::experiments::run_sweep(c);

  std::ostringstream csv;
  ekfp::experiments::sweep_to_csv(csv, result);
  write_text(out / "sweep.csv", csv.str());

  const ekfp::experiments::SweepCell* best = &result.cells.front();
  double mean = 0.0;
  for (const auto& cell : result.cells) {
    if (cell.error_combined < best->error_combined) best = &cell;
    mean += cell.error_combined;
  }
  mean /= static_cast<double>(result.cells.size());
  nlohmann::json summary = {
      {"seed", c.seed},
      {"reps", c.reps},
      {"length", c.length},
      {"q_points", result.q_grid.size()},
      {"r_points", result.r_grid.size()},
      {"best", {{"q", best->q}, {"r", best->r}, {"error", best->error_combined}}},
      {"mean_error", mean}};
  write_text(out / "summary.json", summary.dump(2) + "\n");

  if (plot) {
    // Blank lines between q-blocks make the file splot-ready.
    std::ostringstream dat;
    for (std::size_t qi = 0; qi < result.q_grid.size(); ++qi) {
      for (std::size_t ri = 0; ri < result.r_grid.size(); ++ri) {
        const auto& cell =
            result.cell(static_cast<int>(qi), static_cast<int>(ri));
        dat << cell.q << ' ' << cell.r << ' ' << cell.error_combined << '\n';
      }
      dat << '\n';
    }
    write_text(out / "sweep.dat", dat.str());
  }
}

ekfp::games::Game load_game_for_config(const nlohmann::json& config,
                                       const fs::path& config_dir) {
  if (config.contains("game")) return ekfp::games::game_from_json(config.at("game"));
  if (config.contains("game_file")) {
    fs::path game_path(config.at("game_file").get<std::string>());
    if (game_path.is_relative()) game_path = config_dir / game_path;
    return ekfp::games::load_game(game_path.string());
  }
  throw std::invalid_argument("game config needs 'game' or 'game_file'");
}

void run_game(const nlohmann::json& config, const fs::path& config_dir,
              const fs::path& out, bool plot) {
  ekfp::games::Game game = load_game_for_config(config, config_dir);
  auto c = ekfp::experiments::game_comparison_config_from_json(config);

  // Without an explicit rule the comparison covers both decision rules on
  // identical replication seeds.
  std::vector<ekfp::learning::DecisionRule> rules;
  if (config.contains("rule"))
    rules.push_back(c.rule);
  else
    rules = {ekfp::learning::DecisionRule::kEkfFp,
             ekfp::learning::DecisionRule::kClassicFp};

  nlohmann::json summary = {
      {"game", game.name()},
      {"reps", c.reps},
      {"iterations", c.iterations},
      {"init", ekfp::experiments::init_style_to_string(c.init)},
      {"seed", c.seed},
      {"rules", nlohmann::json::object()}};
  for (auto rule : rules) {
    c.rule = rule;
    auto result = ekfp::experiments::run_game_comparison(game, c);
    std::string name = ekfp::learning::rule_to_string(rule);

    std::ostringstream csv;
    ekfp::experiments::game_comparison_to_csv(csv, result);
    write_text(out / ("game_" + name + ".csv"), csv.str());

    nlohmann::json rule_summary = {
        {"final_nash_frequency", result.nash_frequency.back()},
        {"final_mean_payoff", result.mean_payoff.back()},
        {"median_convergence",
         ekfp::experiments::median_convergence(result.convergence,
                                               c.iterations)},
        {"converged", count_converged(result.convergence)},
        {"convergence", convergence_json(result.convergence)}};
    if (!result.target_frequency.empty())
      rule_summary["final_target_frequency"] = result.target_frequency.back();
    summary["rules"][name] = rule_summary;

    if (plot) {
      std::ostringstream dat;
      for (std::size_t t = 0; t < result.nash_frequency.size(); ++t) {
        dat << (t + 1) << ' ' << result.nash_frequency[t] << ' ';
        if (result.target_frequency.empty())
          dat << "nan";
        else
          dat << result.target_frequency[t];
        dat << ' ' << result.mean_payoff[t] << '\n';
      }
      write_text(out / ("game_" + name + ".dat"), dat.str());
    }
  }
  write_text(out / "summary.json", summary.dump(2) + "\n");
}

void run_sensornet(const nlohmann::json& config, const fs::path& out,
                   bool plot) {
  auto c = ekfp::experiments::sensor_comparison_config_from_json(config);
  auto result = ekfp::experiments::run_sensor_comparison(c);

  std::ostringstream csv;
  ekfp::experiments::sensor_comparison_to_csv(csv, result);
  write_text(out / "sensornet.csv", csv.str());

  nlohmann::json summary = {
      {"n_sensors", c.spec.n_sensors},
      {"n_events", c.spec.n_events},
      {"slots", c.spec.slots},
      {"reps", c.reps},
      {"iterations", c.iterations},
      {"seed", c.seed},
      {"ekf-fp",
       {{"final_normalized_utility", result.ekf_normalized.back()},
        {"median_convergence",
         ekfp::experiments::median_convergence(result.ekf_convergence,
                                               c.iterations)},
        {"converged", count_converged(result.ekf_convergence)},
        {"convergence", convergence_json(result.ekf_convergence)}}},
      {"classic-fp",
       {{"final_normalized_utility", result.classic_normalized.back()},
        {"median_convergence",
         ekfp::experiments::median_convergence(result.classic_convergence,
                                               c.iterations)},
        {"converged", count_converged(result.classic_convergence)},
        {"convergence", convergence_json(result.classic_convergence)}}}};
  write_text(out / "summary.json", summary.dump(2) + "\n");

  if (plot) {
    std::ostringstream dat;
    for (std::size_t t = 0; t < result.ekf_normalized.size(); ++t)
      dat << (t + 1) << ' ' << result.ekf_normalized[t] << ' '
          << result.classic_normalized[t] << '\n';
    write_text(out / "sensornet.dat", dat.str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EKF fictitious play experiment runner"};
  app.require_subcommand(1);

  struct SubArgs {
    CLI::App* sub = nullptr;
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    bool plot = false;
  };
  SubArgs args[4];
  const char* names[4] = {"sweep", "track", "game", "sensornet"};
  const char* descriptions[4] = {
      "mean tracking error across a q-r noise parameter grid",
      "single tracking run against a moving strategy",
      "decision-rule comparison on a strategic-form game",
      "decision-rule comparison on sensor-network schedules"};
  for (int i = 0; i < 4; ++i) {
    SubArgs& a = args[i];
    a.sub = app.add_subcommand(names[i], descriptions[i]);
    a.sub->add_option("--config", a.config, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    a.sub->add_option("--seed", a.seed, "override the config seed");
    a.sub->add_option("--out", a.out, "output directory (created if absent)");
    a.sub->add_flag("--plot-data", a.plot, "also write gnuplot-ready .dat files");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (int i = 0; i < 4; ++i) {
      SubArgs& a = args[i];
      if (!a.sub->parsed()) continue;
      nlohmann::json config = load_config(a.config);
      if (a.sub->count("--seed") > 0) config["seed"] = a.seed;
      fs::path out(a.out);
      fs::create_directories(out);
      fs::path config_dir = fs::path(a.config).parent_path();
      if (i == 0)
        run_sweep(config, out, a.plot);
      else if (i == 1)
        run_track(config, out, a.plot);
      else if (i == 2)
        run_game(config, config_dir, out, a.plot);
      else
        run_sensornet(config, out, a.plot);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
