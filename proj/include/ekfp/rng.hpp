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

#ifndef EKFP_RNG_HPP
#define EKFP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>

namespace ekfp {

// Stream tags used when deriving substream seeds. Keeping them in one place
// guarantees distinct streams never collide across modules.
enum StreamTag : std::uint64_t {
  kTagObservationNoise = 1,
  kTagTrackedAction = 2,
  kTagScenario = 3,
  kTagInitialBelief = 4,
  kTagGameDraw = 5,
  kTagReplication = 6,
};

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Hash-combines a base seed with stream tags so every (seed, tags...) tuple
// owns an independent generator regardless of the order streams are created.
// Each absorption step is a bijection of the running state, so distinct
// tuples of the lengths used here cannot collide systematically.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t state = seed ^ 0xd1b54a32d192ed03ULL;
  std::uint64_t out = splitmix64_next(state);
  for (std::uint64_t tag : tags) {
    std::uint64_t salted = tag ^ 0x2545f4914f6cdd1dULL;
    state ^= splitmix64_next(salted);
    out = splitmix64_next(state);
  }
  return out;
}

// Deterministic random stream. The engine is the standardized mt19937_64 and
// all transforms are hand-rolled from its raw output, so a given seed yields
// the same draw sequence on every build.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform on (0, hi]; used for strictly positive quantities.
  double uniform_positive(double hi) { return hi * (1.0 - uniform01()); }

  // Box-Muller transform.
  double normal(double mean, double stddev) {
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double radius = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * radius * std::cos(2.0 * M_PI * u2);
  }

  // Index drawn according to `probs` (need not be perfectly normalized).
  int categorical(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("categorical: empty distribution");
    double total = 0.0;
    for (double p : probs) total += p;
    double x = uniform01() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      cum += probs[i];
      if (x < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  int uniform_int(int n) {  // [0, n)
    return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ekfp

#endif  // EKFP_RNG_HPP
