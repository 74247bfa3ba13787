#include "hideseek/bench.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <sstream>

#include "hideseek/errors.hpp"

namespace hideseek {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

// Boxed copy of every output array, then flattened back: the per-step
// repack a tuple-of-arrays interface pays.
struct BoxedOutputs {
  std::vector<std::unique_ptr<std::vector<double>>> obs;
  std::vector<std::unique_ptr<double>> rewards;
  std::vector<std::unique_ptr<bool>> dones;
  std::vector<float> flat;

  void pack(const StepOutputs& out, std::size_t n_envs) {
    obs.clear();
    rewards.clear();
    dones.clear();
    const std::size_t per_env = out.obs_image.size() / n_envs;
    for (std::size_t e = 0; e < n_envs; ++e) {
      auto v = std::make_unique<std::vector<double>>();
      v->reserve(per_env);
      for (std::size_t i = 0; i < per_env; ++i) v->push_back(out.obs_image[e * per_env + i]);
      obs.push_back(std::move(v));
    }
    for (float r : out.rewards) rewards.push_back(std::make_unique<double>(r));
    for (std::size_t e = 0; e < n_envs; ++e) {
      dones.push_back(std::make_unique<bool>(out.terminated[e] || out.truncated[e]));
    }
    flat.clear();
    for (const auto& v : obs) {
      for (double x : *v) flat.push_back(static_cast<float>(x));
    }
  }
};

std::size_t parse_size(std::string_view name, const char* text) {
  std::size_t v = 0;
  const std::string_view s(text);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw UsageError(std::string(name) + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(BenchVariant variant) {
  switch (variant) {
    case BenchVariant::Dense: return "dense";
    case BenchVariant::DiffSweep: return "diff_sweep";
    case BenchVariant::UnpaddedStride: return "unpadded_stride";
    case BenchVariant::SerialInit: return "serial_init";
    case BenchVariant::TuplePack: return "tuple_pack";
  }
  return "?";
}

std::optional<BenchVariant> parse_bench_variant(std::string_view text) {
  for (auto v : {BenchVariant::Dense, BenchVariant::DiffSweep, BenchVariant::UnpaddedStride,
                 BenchVariant::SerialInit, BenchVariant::TuplePack}) {
    if (text == to_string(v)) return v;
  }
  return std::nullopt;
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  return std::nullopt;
}

void validate_bench_config(const BenchConfig& config) {
  if (config.envs.empty()) throw UsageError("envs: at least one value required");
  if (config.variants.empty()) throw UsageError("variant: at least one value required");
  if (!config.map && config.agents.empty()) throw UsageError("agents: at least one value required");
  if (config.repeats < 1) throw UsageError("repeats must be >= 1");
  if (config.warmup_seconds < 0) throw UsageError("warmup-s must be >= 0");
  for (std::size_t n : config.envs) {
    if (n == 0) throw UsageError("envs must be >= 1");
    if (config.steps < n) {
      throw UsageError("steps (" + std::to_string(config.steps) + ") must be >= envs (" +
                       std::to_string(n) + ")");
    }
  }
  if (!config.map) {
    for (int a : config.agents) {
      if (a < 1 || a > kMaxAgents) {
        throw UsageError("agents must be in 1.." + std::to_string(kMaxAgents));
      }
    }
  }
}

void apply_env_overrides(BenchConfig& config) {
  if (const char* w = std::getenv("HIDESEEK_WORKERS"); w && *w) {
    config.workers = parse_size("HIDESEEK_WORKERS", w);
  }
  if (const char* p = std::getenv("HIDESEEK_WAIT_POLICY"); p && *p) {
    auto policy = parse_wait_policy(p);
    if (!policy) throw UsageError(std::string("HIDESEEK_WAIT_POLICY: expected spin|yield, got '") + p + "'");
    config.wait_policy = *policy;
  }
  if (const char* s = std::getenv("HIDESEEK_STRIDE_PAD"); s && *s) {
    config.stride_override =
        parse_size("HIDESEEK_STRIDE_PAD", s) != 0 ? StridePolicy::Padded : StridePolicy::Unpadded;
  }
}

ActionSampler::ActionSampler(std::uint64_t seed, std::size_t n_envs, int n_agents)
    : n_agents_(n_agents), batch_(n_envs * static_cast<std::size_t>(n_agents)) {
  streams_.reserve(n_envs);
  // Offset so action streams never coincide with the env streams of the same seed.
  const std::uint64_t action_seed = hash_combine(seed, 0xAC710B5ULL);
  for (std::size_t e = 0; e < n_envs; ++e) streams_.push_back(RngStream::for_env(action_seed, e));
}

void ActionSampler::fill(std::span<AgentAction> out) { random_actions(streams_, n_agents_, out); }

std::span<const AgentAction> ActionSampler::next() {
  fill(batch_);
  return batch_;
}

void random_actions(std::span<RngStream> env_streams, int n_agents, std::span<AgentAction> out) {
  const auto a = static_cast<std::size_t>(n_agents);
  if (out.size() != env_streams.size() * a) {
    throw ContractError("action batch size does not match envs x agents");
  }
  for (std::size_t e = 0; e < env_streams.size(); ++e) {
    random_agent_actions(env_streams[e], out.subspan(e * a, a));
  }
}

MapSpec make_bench_spec(int n_agents, int width, int height, int n_pois, std::uint64_t seed) {
  MapSpec spec;
  spec.width = width;
  spec.height = height;
  spec.tile_types = {
      {0, {200, 200, 200}, true, true, false, false, false, 0.0f, 0.0f},   // open
      {1, {34, 139, 34}, true, true, false, false, false, 3.0f, 0.05f},    // forest
      {2, {30, 90, 200}, false, true, true, false, false, 0.0f, 0.0f},     // water
      {3, {60, 60, 60}, false, false, false, true, false, 8.0f, 0.0f},     // wall
  };
  RngStream rng = RngStream::for_env(seed, 0);
  spec.type_grid.resize(static_cast<std::size_t>(width) * height);
  for (auto& cell : spec.type_grid) {
    const float u = rng.uniform01();
    cell = u < 0.08f ? 3 : (u < 0.18f ? 2 : (u < 0.33f ? 1 : 0));
  }
  for (int i = 0; i < n_agents; ++i) {
    AgentDef a;
    a.index = i;
    a.capabilities = (i % 2 == 0) ? (agent_bits::kWalk | agent_bits::kSwim) : agent_bits::kFly;
    a.view_range = 4.0f;
    a.max_alt = 5.0f;
    spec.agents.push_back(a);
  }
  spec.speeds.assign(static_cast<std::size_t>(n_agents) * spec.tile_types.size(), 1.0f);
  for (int i = 0; i < n_agents; ++i) spec.speeds[i * spec.n_types() + 1] = 0.5f;
  for (int p = 0; p < n_pois; ++p) {
    POIDef poi;
    poi.index = p;
    poi.moves = p % 2 == 1;
    poi.savable_by = n_agents >= 32 ? 0xFFFFFFFFu : ((1u << n_agents) - 1u);
    spec.pois.push_back(poi);
  }
  spec.horizon = 512;
  validate_map_spec(spec);
  return spec;
}

SampleStats sample_stats(std::span<const double> values) {
  SampleStats s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double n = static_cast<double>(values.size());
  s.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return s;
}

BenchRow run_cell(const BenchConfig& config, BenchVariant variant, std::size_t n_envs,
                  int n_agents) {
  const MapSpec spec = config.map ? *config.map : make_bench_spec(n_agents);

  VecConfig vc;
  vc.n_envs = n_envs;
  vc.n_workers = config.workers;
  vc.mode = config.mode;
  vc.seed = config.seed;
  vc.wait_policy = config.wait_policy;
  vc.fill = variant == BenchVariant::DiffSweep ? FillStrategy::DiffSweep : FillStrategy::Dense;
  vc.stride = variant == BenchVariant::UnpaddedStride ? StridePolicy::Unpadded : StridePolicy::Padded;
  if (config.stride_override) vc.stride = *config.stride_override;
  vc.init = variant == BenchVariant::SerialInit ? InitPolicy::Serial : InitPolicy::FirstTouch;

  VecEnv pool(spec, vc);
  pool.reset();
  ActionSampler sampler(config.seed, n_envs, spec.n_agents());
  BoxedOutputs boxed;
  const bool pack = variant == BenchVariant::TuplePack;

  auto one_step = [&] {
    const StepOutputs& out = pool.step(sampler.next());
    if (pack) boxed.pack(out, n_envs);
  };

  const auto warm0 = Clock::now();
  while (seconds_since(warm0) < config.warmup_seconds) one_step();

  const std::size_t iterations = (config.steps + n_envs - 1) / n_envs;
  std::vector<double> sps;
  std::vector<double> walls;
  for (int r = 0; r < config.repeats; ++r) {
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < iterations; ++i) one_step();
    const double dt = seconds_since(t0);
    walls.push_back(dt);
    sps.push_back(static_cast<double>(n_envs * iterations) / dt);
  }
  const SampleStats s = sample_stats(sps);

  BenchRow row;
  row.variant = std::string(to_string(variant));
  row.mode = std::string(to_string(config.mode));
  row.envs = n_envs;
  row.agents = spec.n_agents();
  row.workers = pool.n_workers();
  row.sps_mean = s.mean;
  row.sps_sem = s.sem;
  row.wall_s = sample_stats(walls).mean;
  return row;
}

BenchReport run_benchmark(const BenchConfig& config) {
  validate_bench_config(config);
  BenchReport report;
  const std::vector<int> agent_counts =
      config.map ? std::vector<int>{config.map->n_agents()} : config.agents;
  for (std::size_t envs : config.envs) {
    for (int agents : agent_counts) {
      for (BenchVariant v : config.variants) {
        report.rows.push_back(run_cell(config, v, envs, agents));
      }
    }
  }
  return report;
}

std::string emit_report(const BenchReport& report, ReportFormat format) {
  static constexpr const char* kColumns[] = {"variant", "mode",     "envs",     "agents",
                                             "workers", "sps_mean", "sps_sem", "wall_s"};
  std::ostringstream os;
  auto cells = [](const BenchRow& r) {
    return std::vector<std::string>{r.variant,
                                    r.mode,
                                    std::to_string(r.envs),
                                    std::to_string(r.agents),
                                    std::to_string(r.workers),
                                    format_double(r.sps_mean),
                                    format_double(r.sps_sem),
                                    format_double(r.wall_s)};
  };
  if (format == ReportFormat::Csv) {
    for (std::size_t i = 0; i < std::size(kColumns); ++i) os << (i ? "," : "") << kColumns[i];
    os << '\n';
    for (const auto& row : report.rows) {
      const auto c = cells(row);
      for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << c[i];
      os << '\n';
    }
  } else {
    os << '|';
    for (const char* col : kColumns) os << ' ' << col << " |";
    os << "\n|";
    for (std::size_t i = 0; i < std::size(kColumns); ++i) os << (i < 2 ? " --- |" : " ---: |");
    os << '\n';
    for (const auto& row : report.rows) {
      os << '|';
      for (const auto& c : cells(row)) os << ' ' << c << " |";
      os << '\n';
    }
  }
  return os.str();
}

BenchReport parse_report_csv(std::string_view text) {
  BenchReport report;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line_no++ == 0) {
      if (line != "variant,mode,envs,agents,workers,sps_mean,sps_sem,wall_s") {
        throw FormatError("unexpected CSV header");
      }
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t p = 0;
    for (;;) {
      const std::size_t c = line.find(',', p);
      f.push_back(line.substr(p, c == std::string_view::npos ? std::string_view::npos : c - p));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }
    if (f.size() != 8) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 8 fields");
    }
    auto num = [&](std::string_view s, auto& out) {
      auto [q, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || q != s.data() + s.size()) {
        throw FormatError("line " + std::to_string(line_no) + ": bad number '" + std::string(s) +
                          "'");
      }
    };
    BenchRow row;
    row.variant = std::string(f[0]);
    row.mode = std::string(f[1]);
    num(f[2], row.envs);
    num(f[3], row.agents);
    num(f[4], row.workers);
    num(f[5], row.sps_mean);
    num(f[6], row.sps_sem);
    num(f[7], row.wall_s);
    report.rows.push_back(std::move(row));
  }
  if (line_no == 0) throw FormatError("empty CSV");
  return report;
}

}  // namespace hideseek
