#pragma once

// Tabular Q-learning on a tiny single-agent map: a check that the reward
// signal can be learned, not a training stack.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hideseek/arena.hpp"
#include "hideseek/dynamics.hpp"
#include "hideseek/map_spec.hpp"
#include "hideseek/rng.hpp"

namespace hideseek {

inline constexpr int kSmokeActions = 9;

// Eight unit-length compass moves (N, NE, E, SE, S, SW, W, NW), then stay.
const std::array<AgentAction, kSmokeActions>& smoke_action_set();

struct SmokeConfig {
  MapSpec map;
  std::size_t steps = 200'000;
  double alpha = 0.1;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.5;  // of `steps`, linear
  std::size_t eval_interval = 10'000;
  int eval_episodes = 32;
};

// One agent, one stationary POI, no more than 128 * 128 tiles. Throws ValidationError.
void validate_smoke_config(const SmokeConfig& config);

// (agent tile, POI-found bit) -> tile * 2 + found
int smoke_state(const EnvView& env);
inline int smoke_state_count(const MapSpec& map) { return map.width * map.height * 2; }

struct QTable {
  int n_states = 0;
  std::vector<double> values;  // [state][action]

  explicit QTable(int states = 0) : n_states(states), values(static_cast<std::size_t>(states) * kSmokeActions, 0.0) {}
  double* row(int state) { return values.data() + static_cast<std::size_t>(state) * kSmokeActions; }
  const double* row(int state) const { return values.data() + static_cast<std::size_t>(state) * kSmokeActions; }
  // argmax with uniform tie-breaking
  int greedy(int state, RngStream& rng) const;
};

using SmokePolicy = std::function<int(int state, RngStream& rng)>;
SmokePolicy random_policy();
SmokePolicy stay_policy();
SmokePolicy greedy_policy(const QTable& q);

struct EvalResult {
  double mean = 0.0;
  double sem = 0.0;
  int episodes = 0;
};

// Rollouts from fresh resets of a single-env pool; deterministic given seed.
EvalResult evaluate_policy(const MapSpec& map, const SmokePolicy& policy, int n_episodes,
                           std::uint64_t seed);

struct CurvePoint {
  std::size_t step = 0;
  double mean_return = 0.0;
  double sem = 0.0;
};

struct SmokeResult {
  std::vector<CurvePoint> curve;
  QTable q;
  std::size_t episodes = 0;
};

SmokeResult train_q_smoke(const SmokeConfig& config, std::uint64_t seed);

std::string curve_csv(const std::vector<CurvePoint>& curve);

}  // namespace hideseek
