#include "hideseek/smoke.hpp"

#include <charconv>
#include <sstream>

#include "hideseek/bench.hpp"
#include "hideseek/errors.hpp"
#include "hideseek/vec_env.hpp"

namespace hideseek {

namespace {

constexpr float kDiag = 0.70710678f;

VecConfig single_env(std::uint64_t seed) {
  VecConfig vc;
  vc.n_envs = 1;
  vc.n_workers = 1;
  vc.mode = ObsMode::Void;
  vc.seed = seed;
  vc.desync = false;
  vc.auto_reset = true;
  return vc;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace

const std::array<AgentAction, kSmokeActions>& smoke_action_set() {
  static const std::array<AgentAction, kSmokeActions> actions = {{
      {0.0f, -1.0f, 0},
      {kDiag, -kDiag, 0},
      {1.0f, 0.0f, 0},
      {kDiag, kDiag, 0},
      {0.0f, 1.0f, 0},
      {-kDiag, kDiag, 0},
      {-1.0f, 0.0f, 0},
      {-kDiag, -kDiag, 0},
      {0.0f, 0.0f, 0},
  }};
  return actions;
}

void validate_smoke_config(const SmokeConfig& config) {
  validate_map_spec(config.map);
  if (config.map.n_agents() != 1) throw ValidationError("smoke map needs exactly one agent");
  if (config.map.n_pois() != 1) throw ValidationError("smoke map needs exactly one POI");
  if (config.map.pois[0].moves) throw ValidationError("smoke POI must be stationary");
  if (config.map.width > 128 || config.map.height > 128) {
    throw ValidationError("smoke map must be at most 128x128");
  }
  if (config.eval_interval == 0 || config.eval_episodes < 1) {
    throw ValidationError("eval_interval and eval_episodes must be positive");
  }
  if (config.alpha < 0 || config.alpha > 1 || config.gamma < 0 || config.gamma > 1) {
    throw ValidationError("alpha and gamma must lie in [0, 1]");
  }
}

int smoke_state(const EnvView& env) {
  const AgentState& a = env.agents()[0];
  const int tile = tile_coord(a.y) * env.width() + tile_coord(a.x);
  return tile * 2 + (env.pois()[0].found() ? 1 : 0);
}

int QTable::greedy(int state, RngStream& rng) const {
  const double* q = row(state);
  double best = q[0];
  int ties = 1;
  int choice = 0;
  for (int a = 1; a < kSmokeActions; ++a) {
    if (q[a] > best) {
      best = q[a];
      choice = a;
      ties = 1;
    } else if (q[a] == best) {
      // reservoir pick among equal maxima
      ++ties;
      if (rng.below(static_cast<std::uint32_t>(ties)) == 0) choice = a;
    }
  }
  return choice;
}

SmokePolicy random_policy() {
  return [](int, RngStream& rng) { return static_cast<int>(rng.below(kSmokeActions)); };
}

SmokePolicy stay_policy() {
  return [](int, RngStream&) { return kSmokeActions - 1; };
}

SmokePolicy greedy_policy(const QTable& q) {
  return [&q](int state, RngStream& rng) { return q.greedy(state, rng); };
}

EvalResult evaluate_policy(const MapSpec& map, const SmokePolicy& policy, int n_episodes,
                           std::uint64_t seed) {
  VecEnv env(map, single_env(seed));
  env.reset();
  RngStream policy_rng = RngStream::for_env(hash_combine(seed, 0x9011C7ULL), 0);
  const auto& actions = smoke_action_set();

  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(n_episodes));
  double ret = 0.0;
  while (static_cast<int>(returns.size()) < n_episodes) {
    const int a = policy(smoke_state(env.env(0)), policy_rng);
    const StepOutputs& out = env.step(std::span<const AgentAction>(&actions[a], 1));
    ret += out.rewards[0];
    if (out.terminated[0] || out.truncated[0]) {
      returns.push_back(ret);
      ret = 0.0;
    }
  }
  const SampleStats s = sample_stats(returns);
  return {s.mean, s.sem, n_episodes};
}

SmokeResult train_q_smoke(const SmokeConfig& config, std::uint64_t seed) {
  validate_smoke_config(config);
  SmokeResult result;
  result.q = QTable(smoke_state_count(config.map));
  QTable& q = result.q;

  VecEnv env(config.map, single_env(seed));
  env.reset();
  RngStream rng = RngStream::for_env(hash_combine(seed, 0x51A7EULL), 0);
  const auto& actions = smoke_action_set();
  const double decay_steps =
      std::max(1.0, config.epsilon_decay_fraction * static_cast<double>(config.steps));

  int state = smoke_state(env.env(0));
  std::size_t window = 0;
  for (std::size_t t = 1; t <= config.steps; ++t) {
    const double frac = std::min(1.0, static_cast<double>(t - 1) / decay_steps);
    const double eps = config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac;
    const int a = rng.uniform01() < eps ? static_cast<int>(rng.below(kSmokeActions))
                                        : q.greedy(state, rng);

    const StepOutputs& out = env.step(std::span<const AgentAction>(&actions[a], 1));
    const double r = out.rewards[0];
    const bool done = out.terminated[0] || out.truncated[0];
    // After a done flag the pool has already reset; the new state starts a
    // fresh episode and is not bootstrapped from.
    const int next = smoke_state(env.env(0));
    double target = r;
    if (!done) {
      const double* qn = q.row(next);
      double best = qn[0];
      for (int k = 1; k < kSmokeActions; ++k) best = std::max(best, qn[k]);
      target += config.gamma * best;
    } else {
      ++result.episodes;
    }
    double& cell = q.row(state)[a];
    cell += config.alpha * (target - cell);
    state = next;

    if (t % config.eval_interval == 0 || t == config.steps) {
      const EvalResult e =
          evaluate_policy(config.map, greedy_policy(q), config.eval_episodes, hash_combine(seed, ++window));
      result.curve.push_back({t, e.mean, e.sem});
    }
  }
  return result;
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream os;
  os << "step,mean_return,sem\n";
  for (const auto& p : curve) {
    os << p.step << ',' << format_double(p.mean_return) << ',' << format_double(p.sem) << '\n';
  }
  return os.str();
}

}  // namespace hideseek
