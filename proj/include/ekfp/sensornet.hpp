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

#ifndef EKFP_SENSORNET_HPP
#define EKFP_SENSORNET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ekfp/games.hpp"
#include "ekfp/rng.hpp"

namespace ekfp::sensornet {

/// A sensor's action is the index of the duty-cycle slot it stays awake in.
using ScheduleAction = int;

struct Sensor {
  double x = 0.0;
  double y = 0.0;
  double sense_range = 0.3;
  double comm_range = 0.6;
};

struct Event {
  double x = 0.0;
  double y = 0.0;
  double start = 0.0;     // hours from the start of the day
  double duration = 1.0;  // hours, in (0, 6]
  double value = 1.0;     // in (0, 1]
};

/// A surveillance day: sensors at fixed positions pick one awake slot each;
/// events appear at fixed positions for a bounded time window.
struct SensorScenario {
  std::vector<Sensor> sensors;
  std::vector<Event> events;
  int slots = 2;             // number of equal-length duty-cycle slots
  double day_length = 24.0;  // hours

  int num_sensors() const { return static_cast<int>(sensors.size()); }
  int num_events() const { return static_cast<int>(events.size()); }

  void validate() const {
    if (slots < 1) throw std::invalid_argument("scenario: slots must be >= 1");
    if (!(day_length > 0.0))
      throw std::invalid_argument("scenario: day_length must be positive");
    for (const Sensor& s : sensors) {
      if (!(s.x >= 0.0 && s.x <= 1.0 && s.y >= 0.0 && s.y <= 1.0))
        throw std::invalid_argument(
            "scenario: sensor positions must lie in the unit square");
      if (!(s.sense_range >= 0.0) || !(s.comm_range >= 0.0))
        throw std::invalid_argument("scenario: ranges must be nonnegative");
      // comm_range 0 is the explicit no-communication case; otherwise a
      // sensor must be able to talk past its own sensing disk.
      if (s.comm_range > 0.0 && !(s.sense_range < s.comm_range))
        throw std::invalid_argument(
            "scenario: sense_range must be below comm_range");
    }
    for (const Event& e : events) {
      if (!(e.x >= 0.0 && e.x <= 1.0 && e.y >= 0.0 && e.y <= 1.0))
        throw std::invalid_argument(
            "scenario: event positions must lie in the unit square");
      if (!(e.start >= 0.0 && e.start <= day_length))
        throw std::invalid_argument(
            "scenario: event start must lie within the day");
      if (!(e.duration > 0.0 && e.duration <= 6.0))
        throw std::invalid_argument(
            "scenario: event duration must lie in (0, 6]");
      if (!(e.value > 0.0 && e.value <= 1.0))
        throw std::invalid_argument("scenario: event value must lie in (0, 1]");
    }
  }
};

struct ScenarioSpec {
  int n_sensors = 20;
  int n_events = 20;
  int slots = 2;
  double sense_range = 0.3;
  double comm_range = 0.6;
  double day_length = 24.0;
};

/// Draws a scenario uniformly: positions in the unit square, event starts in
/// [0, day), durations in (0, 6], values in (0, 1]. Deterministic in `seed`;
/// the draw order (sensors first, then events, field by field) is fixed.
inline SensorScenario generate_scenario(const ScenarioSpec& spec,
                                        std::uint64_t seed) {
  if (spec.n_sensors < 0 || spec.n_events < 0)
    throw std::invalid_argument("generate_scenario: negative counts");
  RandomStream rng(derive_seed(seed, {kTagScenario}));
  SensorScenario out;
  out.slots = spec.slots;
  out.day_length = spec.day_length;
  out.sensors.reserve(static_cast<std::size_t>(spec.n_sensors));
  for (int i = 0; i < spec.n_sensors; ++i) {
    Sensor s;
    s.x = rng.uniform01();
    s.y = rng.uniform01();
    s.sense_range = spec.sense_range;
    s.comm_range = spec.comm_range;
    out.sensors.push_back(s);
  }
  out.events.reserve(static_cast<std::size_t>(spec.n_events));
  for (int i = 0; i < spec.n_events; ++i) {
    Event e;
    e.x = rng.uniform01();
    e.y = rng.uniform01();
    e.start = rng.uniform(0.0, spec.day_length);
    e.duration = rng.uniform_positive(6.0);
    e.value = rng.uniform_positive(1.0);
    out.events.push_back(e);
  }
  out.validate();
  return out;
}

inline double distance(const Sensor& s, const Event& e) {
  return std::hypot(s.x - e.x, s.y - e.y);
}

/// Probability that a sensor observing during the event detects it:
/// min(1, 1/d) in the distance d, and certain detection at d = 0.
inline double detection_probability(const Sensor& s, const Event& e) {
  double d = distance(s, e);
  if (d == 0.0) return 1.0;
  return std::min(1.0, 1.0 / d);
}

/// Half-open awake interval [lo, hi) of a duty-cycle slot.
inline std::pair<double, double> slot_window(const SensorScenario& scenario,
                                             int slot) {
  if (slot < 0 || slot >= scenario.slots)
    throw std::invalid_argument("slot_window: slot out of range");
  double len = scenario.day_length / scenario.slots;
  return {slot * len, (slot + 1) * len};
}

/// Half-open interval the event is active within the day, truncated at the
/// day's end.
inline std::pair<double, double> event_window(const SensorScenario& scenario,
                                              const Event& e) {
  return {e.start, std::min(e.start + e.duration, scenario.day_length)};
}

/// True when the slot's awake interval intersects the event's active
/// interval; any partial overlap counts.
inline bool slot_covers_event(const SensorScenario& scenario, int slot,
                              const Event& e) {
  auto [slot_lo, slot_hi] = slot_window(scenario, slot);
  auto [ev_lo, ev_hi] = event_window(scenario, e);
  return slot_lo < ev_hi && ev_lo < slot_hi;
}

/// Value captured from one event given the detection probabilities of the
/// sensors that observe it: value * (1 - prod(1 - p)). Empty observer set
/// yields zero.
inline double event_utility(double value, const std::vector<double>& probs) {
  double miss = 1.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument(
          "event_utility: probabilities must lie in [0, 1]");
    miss *= 1.0 - p;
  }
  return value * (1.0 - miss);
}

namespace detail {

inline void check_joint(const SensorScenario& scenario,
                        const games::JointAction& joint) {
  if (joint.size() != scenario.num_sensors())
    throw std::invalid_argument("sensornet: one slot per sensor");
  for (int i = 0; i < joint.size(); ++i)
    if (joint[i] < 0 || joint[i] >= scenario.slots)
      throw std::invalid_argument("sensornet: slot out of range");
}

}  // namespace detail

/// Total expected value captured across all events when sensor i is awake
/// exactly during slot joint[i]. A sensor observes an event when the event
/// lies within its sensing range and its slot overlaps the event's window.
inline double global_utility(const SensorScenario& scenario,
                             const games::JointAction& joint) {
  detail::check_joint(scenario, joint);
  double total = 0.0;
  for (const Event& e : scenario.events) {
    double miss = 1.0;
    for (int i = 0; i < scenario.num_sensors(); ++i) {
      const Sensor& s = scenario.sensors[static_cast<std::size_t>(i)];
      if (distance(s, e) > s.sense_range) continue;
      if (!slot_covers_event(scenario, joint[i], e)) continue;
      miss *= 1.0 - detection_probability(s, e);
    }
    total += e.value * (1.0 - miss);
  }
  return total;
}

/// Utility of the energy-unconstrained baseline where every sensor senses
/// through the whole day. Upper-bounds global_utility over all schedules.
inline double always_on_utility(const SensorScenario& scenario) {
  double total = 0.0;
  for (const Event& e : scenario.events) {
    auto [lo, hi] = event_window(scenario, e);
    if (!(lo < hi)) continue;  // event never active within the day
    double miss = 1.0;
    for (const Sensor& s : scenario.sensors) {
      if (distance(s, e) > s.sense_range) continue;
      miss *= 1.0 - detection_probability(s, e);
    }
    total += e.value * (1.0 - miss);
  }
  return total;
}

/// Undirected communication graph: i and j are neighbors when each lies
/// within the other's positive communication range. Sorted adjacency lists;
/// comm_range 0 disables communication for that sensor.
inline std::vector<std::vector<int>> neighbor_graph(
    const SensorScenario& scenario) {
  const int n = scenario.num_sensors();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Sensor& a = scenario.sensors[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      const Sensor& b = scenario.sensors[static_cast<std::size_t>(j)];
      if (a.comm_range <= 0.0 || b.comm_range <= 0.0) continue;
      double d = std::hypot(a.x - b.x, a.y - b.y);
      if (d <= a.comm_range && d <= b.comm_range) {
        adj[static_cast<std::size_t>(i)].push_back(j);
        adj[static_cast<std::size_t>(j)].push_back(i);
      }
    }
  }
  return adj;
}

/// Value captured from the events inside sensor i's sensing range by the
/// sensors of its communication neighborhood (itself included). `members`
/// lists the neighborhood's sensor indices with `member_slots` parallel to
/// it; the pair must cover sensor i itself.
inline double local_utility(const SensorScenario& scenario, int sensor,
                            const std::vector<int>& members,
                            const std::vector<int>& member_slots) {
  if (sensor < 0 || sensor >= scenario.num_sensors())
    throw std::invalid_argument("local_utility: sensor out of range");
  if (members.size() != member_slots.size())
    throw std::invalid_argument(
        "local_utility: one slot per neighborhood member");
  bool has_self = false;
  std::vector<char> seen(scenario.sensors.size(), 0);
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (members[k] < 0 || members[k] >= scenario.num_sensors())
      throw std::invalid_argument("local_utility: member out of range");
    if (member_slots[k] < 0 || member_slots[k] >= scenario.slots)
      throw std::invalid_argument("local_utility: slot out of range");
    if (seen[static_cast<std::size_t>(members[k])]++)
      throw std::invalid_argument("local_utility: duplicate member");
    if (members[k] == sensor) has_self = true;
  }
  if (!has_self)
    throw std::invalid_argument(
        "local_utility: neighborhood must include the sensor itself");

  const Sensor& self = scenario.sensors[static_cast<std::size_t>(sensor)];
  double total = 0.0;
  for (const Event& e : scenario.events) {
    if (distance(self, e) > self.sense_range) continue;
    double miss = 1.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const Sensor& s =
          scenario.sensors[static_cast<std::size_t>(members[k])];
      if (distance(s, e) > s.sense_range) continue;
      if (!slot_covers_event(scenario, member_slots[k], e)) continue;
      miss *= 1.0 - detection_probability(s, e);
    }
    total += e.value * (1.0 - miss);
  }
  return total;
}

/// The surveillance scheduling game. Players are sensors, actions are awake
/// slots, payoffs are local utilities over the communication neighborhood,
/// and the shared objective is the global utility. Satisfies the learning
/// GameView concept and exposes the communication graph so learners model
/// neighbors only.
class SensorGame {
 public:
  explicit SensorGame(SensorScenario scenario)
      : scenario_(std::move(scenario)) {
    scenario_.validate();
    neighbors_ = neighbor_graph(scenario_);
    const int n = scenario_.num_sensors();
    const int m = scenario_.num_events();
    covers_.assign(static_cast<std::size_t>(m),
                   std::vector<char>(static_cast<std::size_t>(scenario_.slots),
                                     0));
    for (int e = 0; e < m; ++e)
      for (int s = 0; s < scenario_.slots; ++s)
        covers_[static_cast<std::size_t>(e)][static_cast<std::size_t>(s)] =
            slot_covers_event(scenario_, s,
                              scenario_.events[static_cast<std::size_t>(e)])
                ? 1
                : 0;
    in_range_.assign(static_cast<std::size_t>(n), {});
    for (int i = 0; i < n; ++i) {
      const Sensor& s = scenario_.sensors[static_cast<std::size_t>(i)];
      for (int e = 0; e < m; ++e) {
        const Event& ev = scenario_.events[static_cast<std::size_t>(e)];
        if (distance(s, ev) <= s.sense_range)
          in_range_[static_cast<std::size_t>(i)].push_back(
              {e, detection_probability(s, ev)});
      }
    }
  }

  int num_players() const { return scenario_.num_sensors(); }
  int num_actions(int) const { return scenario_.slots; }
  bool has_global() const { return true; }

  double global(const games::JointAction& joint) const {
    return global_utility(scenario_, joint);
  }

  /// Realized local utility of the player's communication neighborhood.
  double payoff(int player, const games::JointAction& joint) const {
    detail::check_joint(scenario_, joint);
    check_player(player);
    double total = 0.0;
    for (const auto& [e, p_self] : in_range_[static_cast<std::size_t>(player)])
      total += value_of(e) * (1.0 - miss_product(player, e, joint));
    return total;
  }

  /// Slot maximizing the expected local utility against independent opponent
  /// strategies; `opponents` is the dense per-opponent profile in increasing
  /// player order with the player's own entry skipped. Entries for sensors
  /// outside the communication neighborhood are ignored. Ties break toward
  /// the lowest slot index.
  int best_response(int player,
                    const std::vector<games::MixedStrategy>& opponents) const {
    check_player(player);
    int best = 0;
    double best_value = expected_local_utility(player, 0, opponents);
    for (int s = 1; s < scenario_.slots; ++s) {
      double v = expected_local_utility(player, s, opponents);
      if (v > best_value) {
        best = s;
        best_value = v;
      }
    }
    return best;
  }

  /// Expected local utility of awaking in `slot` while the neighborhood
  /// mixes independently. Small neighborhoods are enumerated exactly; larger
  /// ones use the per-event factorization, which is exact as well because
  /// the miss product is independent across sensors.
  double expected_local_utility(
      int player, int slot,
      const std::vector<games::MixedStrategy>& opponents) const {
    const auto& nbrs = neighbors_[static_cast<std::size_t>(player)];
    if (nbrs.size() <= kEnumerationLimit)
      return expected_local_utility_enumerated(player, slot, opponents);
    return expected_local_utility_factorized(player, slot, opponents);
  }

  /// Exact expectation by enumerating the neighborhood's joint slots.
  double expected_local_utility_enumerated(
      int player, int slot,
      const std::vector<games::MixedStrategy>& opponents) const {
    check_profile(player, slot, opponents);
    const auto& nbrs = neighbors_[static_cast<std::size_t>(player)];
    std::vector<int> slots(nbrs.size(), 0);
    double total = 0.0;
    enumerate(player, slot, opponents, nbrs, slots, 0, 1.0, total);
    return total;
  }

  /// Exact expectation via per-event independence: each neighbor misses an
  /// event with probability 1 - p * P(its slot covers the event).
  double expected_local_utility_factorized(
      int player, int slot,
      const std::vector<games::MixedStrategy>& opponents) const {
    check_profile(player, slot, opponents);
    const auto& nbrs = neighbors_[static_cast<std::size_t>(player)];
    double total = 0.0;
    for (const auto& [e, p_self] :
         in_range_[static_cast<std::size_t>(player)]) {
      double miss = 1.0 - p_self * covered(e, slot);
      for (int nbr : nbrs) {
        double p = probability_in_range(nbr, e);
        if (p == 0.0) continue;
        const games::MixedStrategy& sigma =
            opponents[static_cast<std::size_t>(nbr < player ? nbr : nbr - 1)];
        double cover_prob = 0.0;
        for (int s = 0; s < scenario_.slots; ++s)
          cover_prob +=
              sigma.probs[static_cast<std::size_t>(s)] * covered(e, s);
        miss *= 1.0 - p * cover_prob;
      }
      total += value_of(e) * (1.0 - miss);
    }
    return total;
  }

  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }
  const SensorScenario& scenario() const { return scenario_; }

 private:
  static constexpr std::size_t kEnumerationLimit = 8;

  void check_player(int player) const {
    if (player < 0 || player >= num_players())
      throw std::invalid_argument("sensor game: player out of range");
  }

  void check_profile(int player, int slot,
                     const std::vector<games::MixedStrategy>& opponents) const {
    check_player(player);
    if (slot < 0 || slot >= scenario_.slots)
      throw std::invalid_argument("sensor game: slot out of range");
    if (static_cast<int>(opponents.size()) != num_players() - 1)
      throw std::invalid_argument(
          "sensor game: one strategy per opponent expected");
    for (int nbr : neighbors_[static_cast<std::size_t>(player)]) {
      const games::MixedStrategy& sigma =
          opponents[static_cast<std::size_t>(nbr < player ? nbr : nbr - 1)];
      if (static_cast<int>(sigma.probs.size()) != scenario_.slots)
        throw std::invalid_argument("sensor game: strategy dimension mismatch");
    }
  }

  double value_of(int e) const {
    return scenario_.events[static_cast<std::size_t>(e)].value;
  }

  double covered(int e, int slot) const {
    return covers_[static_cast<std::size_t>(e)][static_cast<std::size_t>(slot)]
               ? 1.0
               : 0.0;
  }

  // Detection probability of sensor i for event e, zero when out of range.
  double probability_in_range(int i, int e) const {
    for (const auto& [ev, p] : in_range_[static_cast<std::size_t>(i)])
      if (ev == e) return p;
    return 0.0;
  }

  // Product of miss probabilities over the player's neighborhood (self
  // included) for event e under the given joint schedule.
  double miss_product(int player, int e,
                      const games::JointAction& joint) const {
    double miss = 1.0;
    auto fold = [&](int i) {
      double p = probability_in_range(i, e);
      if (p == 0.0) return;
      miss *= 1.0 - p * covered(e, joint[i]);
    };
    fold(player);
    for (int nbr : neighbors_[static_cast<std::size_t>(player)]) fold(nbr);
    return miss;
  }

  void enumerate(int player, int slot,
                 const std::vector<games::MixedStrategy>& opponents,
                 const std::vector<int>& nbrs, std::vector<int>& slots,
                 std::size_t depth, double prob, double& total) const {
    if (prob == 0.0) return;
    if (depth == nbrs.size()) {
      double contribution = 0.0;
      for (const auto& [e, p_self] :
           in_range_[static_cast<std::size_t>(player)]) {
        double miss = 1.0 - p_self * covered(e, slot);
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
          double p = probability_in_range(nbrs[k], e);
          if (p == 0.0) continue;
          miss *= 1.0 - p * covered(e, slots[k]);
        }
        contribution += value_of(e) * (1.0 - miss);
      }
      total += prob * contribution;
      return;
    }
    int nbr = nbrs[depth];
    const games::MixedStrategy& sigma =
        opponents[static_cast<std::size_t>(nbr < player ? nbr : nbr - 1)];
    for (int s = 0; s < scenario_.slots; ++s) {
      slots[depth] = s;
      enumerate(player, slot, opponents, nbrs, slots, depth + 1,
                prob * sigma.probs[static_cast<std::size_t>(s)], total);
    }
  }

  SensorScenario scenario_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<char>> covers_;  // covers_[event][slot]
  // in_range_[sensor] lists (event index, detection probability) pairs.
  std::vector<std::vector<std::pair<int, double>>> in_range_;
};

inline SensorGame build_sensor_game(SensorScenario scenario) {
  return SensorGame(std::move(scenario));
}

// --- External interfaces -----------------------------------------------------

inline nlohmann::json scenario_to_json(const SensorScenario& scenario) {
  nlohmann::json j;
  j["slots"] = scenario.slots;
  j["day_length"] = scenario.day_length;
  j["sensors"] = nlohmann::json::array();
  for (const Sensor& s : scenario.sensors)
    j["sensors"].push_back({{"x", s.x},
                            {"y", s.y},
                            {"sense_range", s.sense_range},
                            {"comm_range", s.comm_range}});
  j["events"] = nlohmann::json::array();
  for (const Event& e : scenario.events)
    j["events"].push_back({{"x", e.x},
                           {"y", e.y},
                           {"start", e.start},
                           {"duration", e.duration},
                           {"value", e.value}});
  return j;
}

inline SensorScenario scenario_from_json(const nlohmann::json& j) {
  SensorScenario scenario;
  scenario.slots = j.at("slots").get<int>();
  scenario.day_length = j.value("day_length", scenario.day_length);
  for (const auto& js : j.at("sensors")) {
    Sensor s;
    s.x = js.at("x").get<double>();
    s.y = js.at("y").get<double>();
    s.sense_range = js.value("sense_range", s.sense_range);
    s.comm_range = js.value("comm_range", s.comm_range);
    scenario.sensors.push_back(s);
  }
  if (j.contains("events"))
    for (const auto& je : j.at("events")) {
      Event e;
      e.x = je.at("x").get<double>();
      e.y = je.at("y").get<double>();
      e.start = je.at("start").get<double>();
      e.duration = je.at("duration").get<double>();
      e.value = je.at("value").get<double>();
      scenario.events.push_back(e);
    }
  scenario.validate();
  return scenario;
}

}  // namespace ekfp::sensornet

#endif  // EKFP_SENSORNET_HPP
