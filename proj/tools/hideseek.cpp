// hideseek: throughput/ablation benchmark and tabular learning smoke run.
//
//   hideseek bench --envs 1,16,256 --agents 1,5,10 --mode void --variant dense,unpadded_stride
//   hideseek smoke-train --steps 200000 --seed 1 --out curve.csv
//   hideseek replay --map m.png --config c.json --envs 8 --actions a.f32 --out outputs.bin
//
// Exit status 0 on success, 2 on usage errors, 1 on anything else.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hideseek/bench.hpp"
#include "hideseek/errors.hpp"
#include "hideseek/map_spec.hpp"
#include "hideseek/smoke.hpp"
#include "hideseek/vec_env.hpp"

namespace {

using namespace hideseek;

constexpr int kUsageExit = 2;

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ResourceError("cannot open '" + path + "' for writing");
  f << text;
}

MapSpec load_pair(const std::string& map, const std::string& config) {
  if (map.empty() != config.empty()) throw UsageError("--map and --config go together");
  return load_map_spec(map, config);
}

// Raw float32 (steps, envs, agents, 3) actions in; every step's output
// arrays (descriptor order, described bytes only) out.
void replay(const MapSpec& spec, const VecConfig& config, const std::string& actions_path,
            const std::string& out_path) {
  std::ifstream in(actions_path, std::ios::binary);
  if (!in) throw ResourceError("cannot open '" + actions_path + "'");
  std::vector<float> raw;
  float v = 0.0f;
  while (in.read(reinterpret_cast<char*>(&v), sizeof v)) raw.push_back(v);
  const std::size_t per_step = config.n_envs * static_cast<std::size_t>(spec.n_agents()) * 3;
  if (raw.empty() || raw.size() % per_step != 0) {
    throw FormatError(actions_path + ": expected a multiple of " + std::to_string(per_step) + " floats");
  }

  VecEnv env(spec, config);
  env.reset();
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ResourceError("cannot open '" + out_path + "' for writing");
  std::vector<AgentAction> actions(per_step / 3);
  for (std::size_t t = 0; t < raw.size() / per_step; ++t) {
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const float* a = raw.data() + t * per_step + i * 3;
      actions[i] = {a[0], a[1], static_cast<std::int32_t>(a[2])};
    }
    env.step(actions);
    for (const auto& d : env.plan().descriptors) {
      out.write(reinterpret_cast<const char*>(env.buffer_bytes().data() + d.offset),
                static_cast<std::streamsize>(d.extent));
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hideseek;

  CLI::App app{"Vectorized hide-and-seek engine: benchmarks and smoke training"};
  app.require_subcommand(1);

  // bench
  BenchConfig bench;
  std::vector<std::string> variant_names{"dense"};
  std::string mode_name = std::string(to_string(bench.mode));
  std::string wait_name;
  std::string bench_out;
  std::string format_name = "csv";
  std::string bench_map, bench_config;
  std::size_t workers_flag = 0;
  auto* b = app.add_subcommand("bench", "Time random-action stepping and write SPS mean/SEM rows");
  b->add_option("--envs", bench.envs, "Env counts (comma separated)")->delimiter(',');
  b->add_option("--agents", bench.agents, "Agent counts (comma separated)")->delimiter(',');
  b->add_option("--mode", mode_name,
                "decentralized|decentralized_state|centralized|centralized_state|state|void");
  b->add_option("--steps", bench.steps, "Env-steps per timed repeat");
  auto* workers_opt = b->add_option("--workers", workers_flag, "Worker threads (0: all cores)");
  b->add_option("--wait-policy", wait_name, "spin|yield");
  b->add_option("--variant", variant_names,
                "dense|diff_sweep|unpadded_stride|serial_init|tuple_pack (comma separated)")
      ->delimiter(',');
  b->add_option("--repeats", bench.repeats, "Timed repeats per cell");
  b->add_option("--warmup-s", bench.warmup_seconds, "Untimed warmup seconds per cell");
  b->add_option("--seed", bench.seed, "Env and action seed");
  b->add_option("--map", bench_map, "Map PNG (default: generated 32x32 map)");
  b->add_option("--config", bench_config, "Map JSON config");
  b->add_option("--out", bench_out, "Output path (default stdout)");
  b->add_option("--format", format_name, "csv|markdown");

  // smoke-train
  SmokeConfig smoke;
  std::uint64_t smoke_seed = 0;
  std::string curve_out;
  std::string smoke_map = std::string(HIDESEEK_DATA_DIR) + "/smoke/map.png";
  std::string smoke_config = std::string(HIDESEEK_DATA_DIR) + "/smoke/config.json";
  int baseline_episodes = 1000;
  auto* s = app.add_subcommand("smoke-train", "Tabular Q-learning on the 8x8 smoke map");
  s->add_option("--steps", smoke.steps, "Training env-steps");
  s->add_option("--seed", smoke_seed, "Seed");
  s->add_option("--out", curve_out, "Learning-curve CSV (default stdout)");
  s->add_option("--map", smoke_map, "Map PNG");
  s->add_option("--config", smoke_config, "Map JSON config");
  s->add_option("--eval-interval", smoke.eval_interval, "Steps between greedy evaluations");
  s->add_option("--alpha", smoke.alpha, "Learning rate");
  s->add_option("--gamma", smoke.gamma, "Discount");
  s->add_option("--baseline-episodes", baseline_episodes, "Random-policy episodes");

  // replay
  std::string replay_map, replay_config, replay_actions, replay_out;
  std::string replay_mode = "decentralized";
  VecConfig replay_vc;
  auto* r = app.add_subcommand("replay", "Step a pool with recorded actions and dump every output");
  r->add_option("--map", replay_map, "Map PNG")->required();
  r->add_option("--config", replay_config, "Map JSON config")->required();
  r->add_option("--envs", replay_vc.n_envs, "Env count");
  r->add_option("--workers", replay_vc.n_workers, "Worker threads (0: all cores)");
  r->add_option("--mode", replay_mode, "Observation mode");
  r->add_option("--seed", replay_vc.seed, "Seed");
  r->add_option("--actions", replay_actions, "Raw float32 actions (steps, envs, agents, 3)")->required();
  r->add_option("--out", replay_out, "Output bytes")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    if (*b) {
      apply_env_overrides(bench);
      if (*workers_opt) bench.workers = workers_flag;
      auto mode = parse_obs_mode(mode_name);
      if (!mode) throw UsageError("--mode: unknown mode '" + mode_name + "'");
      bench.mode = *mode;
      if (!wait_name.empty()) {
        auto policy = parse_wait_policy(wait_name);
        if (!policy) throw UsageError("--wait-policy: expected spin|yield");
        bench.wait_policy = *policy;
      }
      bench.variants.clear();
      for (const auto& v : variant_names) {
        auto parsed = parse_bench_variant(v);
        if (!parsed) throw UsageError("--variant: unknown variant '" + v + "'");
        bench.variants.push_back(*parsed);
      }
      auto format = parse_report_format(format_name);
      if (!format) throw UsageError("--format: expected csv|markdown");
      if (!bench_map.empty() || !bench_config.empty()) bench.map = load_pair(bench_map, bench_config);
      validate_bench_config(bench);
      const BenchReport report = run_benchmark(bench);
      write_output(bench_out, emit_report(report, *format));
      return 0;
    }

    if (*r) {
      auto mode = parse_obs_mode(replay_mode);
      if (!mode) throw UsageError("--mode: unknown mode '" + replay_mode + "'");
      replay_vc.mode = *mode;
      replay(load_pair(replay_map, replay_config), replay_vc, replay_actions, replay_out);
      return 0;
    }

    smoke.map = load_pair(smoke_map, smoke_config);
    const EvalResult base = evaluate_policy(smoke.map, random_policy(), baseline_episodes, smoke_seed);
    const SmokeResult result = train_q_smoke(smoke, smoke_seed);
    write_output(curve_out, curve_csv(result.curve));
    const double final_return = result.curve.empty() ? 0.0 : result.curve.back().mean_return;
    std::fprintf(stderr, "random baseline %.4f +- %.4f (%d episodes); final greedy %.4f (%.2fx)\n",
                 base.mean, base.sem, base.episodes, final_return,
                 base.mean != 0.0 ? final_return / base.mean : 0.0);
    return 0;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsageExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
