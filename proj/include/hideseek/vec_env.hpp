#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hideseek/arena.hpp"
#include "hideseek/dynamics.hpp"
#include "hideseek/map_spec.hpp"
#include "hideseek/observation.hpp"
#include "hideseek/worker_pool.hpp"

namespace hideseek {

enum class FillStrategy {
  Dense,      // every image rewritten every step
  DiffSweep,  // only changed tiles/entities rewritten (ablation)
};

enum class StridePolicy {
  // 256-byte env stride, cache-line aligned work blocks, per-worker scratch
  // for rewards/dones copied out serially.
  Padded,
  // 8-byte env stride, single-env work items, outputs written in place from
  // the workers (false-sharing ablation).
  Unpadded,
};

enum class InitPolicy {
  FirstTouch,  // each work block is zeroed by the pool
  Serial,      // the whole slab is zeroed by the calling thread
};

struct VecConfig {
  std::size_t n_envs = 1;
  std::size_t n_workers = 0;  // 0: hardware concurrency
  ObsMode mode = ObsMode::DecentralizedNoState;
  std::uint64_t seed = 0;
  bool desync = true;
  bool auto_reset = true;
  WaitPolicy wait_policy = WaitPolicy::Yield;
  FillStrategy fill = FillStrategy::Dense;
  StridePolicy stride = StridePolicy::Padded;
  InitPolicy init = InitPolicy::FirstTouch;
};

enum class BufferRole { ObsImage, ObsLogical, StateImage, Rewards, Terminated, Truncated };
std::string_view to_string(BufferRole role);

// One output array inside the pool's single contiguous allocation.
struct BufferDescriptor {
  BufferRole role;
  std::string_view dtype;  // "float32" or "uint8"
  std::vector<std::size_t> shape;
  std::size_t offset = 0;  // bytes from the allocation base, 64-byte aligned
  std::size_t extent = 0;  // bytes

  std::size_t elements() const { return extent / (dtype == "uint8" ? 1 : 4); }
};

struct BufferPlan {
  std::vector<BufferDescriptor> descriptors;
  std::size_t total_bytes = 0;

  const BufferDescriptor* find(BufferRole role) const;
};

BufferPlan plan_buffers(const MapSpec& spec, const VecConfig& config);

struct StepOutputs {
  std::span<float> rewards;  // n_envs, or n_envs * n_agents with per-agent rewards
  std::span<std::uint8_t> terminated;
  std::span<std::uint8_t> truncated;
  std::span<float> obs_image;    // per-agent or fused images
  std::span<float> obs_logical;  // per-agent telemetry (decentralized modes)
  std::span<float> state_image;
};

class VecEnv {
 public:
  // With an empty `buffers` span the pool owns its output allocation;
  // otherwise the caller's bytes (64-byte aligned, >= plan.total_bytes) are
  // used in place for the lifetime of the pool.
  VecEnv(const MapSpec& spec, VecConfig config, std::span<std::byte> buffers = {});
  ~VecEnv();

  VecEnv(const VecEnv&) = delete;
  VecEnv& operator=(const VecEnv&) = delete;

  const StepOutputs& reset();
  // actions: n_envs * n_agents, env-major. Throws ContractError on shape
  // mismatch, bad radio target, or after close().
  const StepOutputs& step(std::span<const AgentAction> actions);
  void close();
  bool closed() const { return closed_; }

  const StepOutputs& outputs() const { return outputs_; }
  const BufferPlan& plan() const { return plan_; }
  std::span<std::byte> buffer_bytes() const { return buffer_; }
  const VecConfig& config() const { return config_; }
  std::size_t n_envs() const { return config_.n_envs; }
  int n_agents() const { return n_agents_; }
  std::size_t n_workers() const;
  std::size_t block_size() const { return block_; }

  const EnvironmentArena& arena() const;
  EnvView env(std::size_t index) const { return arena().env(index); }
  const WorldRules& rules() const { return arena().rules(); }
  RngStream rng(std::size_t index) const;
  ObsBuffers obs_buffers(std::size_t index) const;

 private:
  struct EnvSlot;
  struct WorkerState;

  void require_open() const;
  void first_touch();
  void reset_block(std::size_t block, std::size_t worker);
  void step_block(std::size_t block, std::size_t worker, std::span<const AgentAction> actions);

  VecConfig config_;
  int n_agents_ = 0;
  bool per_agent_rewards_ = false;
  std::size_t block_ = 1;
  std::size_t n_blocks_ = 0;
  bool closed_ = false;

  std::unique_ptr<EnvironmentArena> arena_;
  std::unique_ptr<WorkerPool> pool_;
  std::vector<EnvSlot> slots_;
  std::vector<std::unique_ptr<WorkerState>> workers_;

  BufferPlan plan_;
  AlignedBuffer owned_;
  std::span<std::byte> buffer_;
  StepOutputs outputs_;
  std::size_t agent_image_floats_ = 0;
  std::size_t fused_image_floats_ = 0;
};

}  // namespace hideseek
