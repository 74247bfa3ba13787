#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hideseek/dynamics.hpp"
#include "hideseek/map_spec.hpp"
#include "hideseek/observation.hpp"
#include "hideseek/rng.hpp"
#include "hideseek/vec_env.hpp"
#include "hideseek/worker_pool.hpp"

namespace hideseek {

enum class BenchVariant { Dense, DiffSweep, UnpaddedStride, SerialInit, TuplePack };

std::string_view to_string(BenchVariant variant);
std::optional<BenchVariant> parse_bench_variant(std::string_view text);

struct BenchConfig {
  std::vector<std::size_t> envs{1024};
  std::vector<int> agents{1};
  ObsMode mode = ObsMode::DecentralizedNoState;
  std::size_t steps = 1'000'000;  // env-steps per timed repeat
  std::size_t workers = 0;
  WaitPolicy wait_policy = WaitPolicy::Yield;
  std::vector<BenchVariant> variants{BenchVariant::Dense};
  double warmup_seconds = 5.0;
  int repeats = 6;
  std::uint64_t seed = 0;
  // Overrides the padding of every cell (HIDESEEK_STRIDE_PAD=0).
  std::optional<StridePolicy> stride_override;
  // When set, agents[] is ignored and the map's own agent count is used.
  std::optional<MapSpec> map;
};

// Throws UsageError.
void validate_bench_config(const BenchConfig& config);

// HIDESEEK_WORKERS, HIDESEEK_WAIT_POLICY, HIDESEEK_STRIDE_PAD. Throws
// UsageError on unparsable values.
void apply_env_overrides(BenchConfig& config);

struct BenchRow {
  std::string variant;
  std::string mode;
  std::size_t envs = 0;
  int agents = 0;
  std::size_t workers = 0;
  double sps_mean = 0.0;
  double sps_sem = 0.0;
  double wall_s = 0.0;  // mean seconds per timed repeat

  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

// Per-env action streams; moves uniform in [-1,1)^2 and radio targets uniform
// over the agents, written straight into the AgentAction batch.
class ActionSampler {
 public:
  ActionSampler(std::uint64_t seed, std::size_t n_envs, int n_agents);

  void fill(std::span<AgentAction> out);
  std::span<const AgentAction> next();
  std::span<const RngStream> streams() const { return streams_; }

 private:
  std::vector<RngStream> streams_;
  int n_agents_;
  std::vector<AgentAction> batch_;
};

void random_actions(std::span<RngStream> env_streams, int n_agents, std::span<AgentAction> out);

// Open terrain with scattered walls, water and forest; random spawns.
MapSpec make_bench_spec(int n_agents, int width = 32, int height = 32, int n_pois = 2,
                        std::uint64_t seed = 7);

struct SampleStats {
  double mean = 0.0;
  double sem = 0.0;  // sample stddev / sqrt(n); 0 for n < 2
};
SampleStats sample_stats(std::span<const double> values);

BenchRow run_cell(const BenchConfig& config, BenchVariant variant, std::size_t n_envs,
                  int n_agents);
BenchReport run_benchmark(const BenchConfig& config);

enum class ReportFormat { Csv, Markdown };
std::optional<ReportFormat> parse_report_format(std::string_view text);

std::string emit_report(const BenchReport& report, ReportFormat format);
// Inverse of the CSV form. Throws FormatError.
BenchReport parse_report_csv(std::string_view text);

}  // namespace hideseek
