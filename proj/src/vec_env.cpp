#include "hideseek/vec_env.hpp"

#include <cstring>
#include <numeric>

#include "hideseek/errors.hpp"

namespace hideseek {

struct alignas(kCacheLine) VecEnv::EnvSlot {
  RngStream rng;
  // After a dense emit the diff path has a valid base to patch.
  bool images_valid = false;
};

struct VecEnv::WorkerState {
  struct Record {
    std::uint32_t env;
    float reward;
    std::uint8_t terminated;
    std::uint8_t truncated;
  };

  explicit WorkerState(const ArenaLayout& layout) : scratch(layout) {}

  StepScratch scratch;
  std::vector<Record> records;
  std::vector<float> agent_rewards;  // n_agents per record when per-agent
  std::array<AgentAction, kMaxAgents> actions{};
  AlignedBuffer before;  // pre-step snapshot for the diff path
};

namespace {

constexpr std::size_t kOutputAlign = kCacheLine;

std::size_t block_for(std::span<const std::size_t> per_env_bytes) {
  std::size_t g = 1;
  for (std::size_t s : per_env_bytes) {
    if (s == 0) continue;
    g = std::lcm(g, kOutputAlign / std::gcd(kOutputAlign, s));
  }
  return g;
}

struct Shapes {
  ArenaCounts counts;
  ObsLayout agent;
  ObsLayout fused;
  bool per_agent_rewards;
};

Shapes shapes_for(const MapSpec& spec) {
  Shapes s;
  s.counts = spec.counts();
  const bool single = spec.dynamics.other_agents_single_plane;
  s.agent = ObsLayout::per_agent(s.counts, single);
  s.fused = ObsLayout::fused(s.counts, single);
  s.per_agent_rewards = spec.dynamics.per_agent_rewards;
  return s;
}

std::vector<std::size_t> image_shape(std::size_t n_envs, const ObsLayout& l) {
  return {n_envs, static_cast<std::size_t>(l.n_channels), static_cast<std::size_t>(l.height),
          static_cast<std::size_t>(l.width)};
}

}  // namespace

std::string_view to_string(BufferRole role) {
  switch (role) {
    case BufferRole::ObsImage: return "obs_image";
    case BufferRole::ObsLogical: return "obs_logical";
    case BufferRole::StateImage: return "state_image";
    case BufferRole::Rewards: return "rewards";
    case BufferRole::Terminated: return "terminated";
    case BufferRole::Truncated: return "truncated";
  }
  return "?";
}

const BufferDescriptor* BufferPlan::find(BufferRole role) const {
  for (const auto& d : descriptors) {
    if (d.role == role) return &d;
  }
  return nullptr;
}

BufferPlan plan_buffers(const MapSpec& spec, const VecConfig& config) {
  if (config.n_envs == 0) throw ValidationError("n_envs must be positive");
  const Shapes s = shapes_for(spec);
  const std::size_t n = config.n_envs;
  const auto a = static_cast<std::size_t>(s.counts.n_agents);

  BufferPlan plan;
  std::size_t cursor = 0;
  auto add = [&](BufferRole role, std::string_view dtype, std::vector<std::size_t> shape) {
    std::size_t elems = 1;
    for (std::size_t d : shape) elems *= d;
    const std::size_t bytes = elems * (dtype == "uint8" ? 1 : 4);
    cursor = round_up(cursor, kOutputAlign);
    plan.descriptors.push_back({role, dtype, std::move(shape), cursor, bytes});
    cursor += bytes;
  };

  if (mode_has_agent_obs(config.mode)) {
    auto shape = image_shape(n, s.agent);
    shape.insert(shape.begin() + 1, a);
    add(BufferRole::ObsImage, "float32", std::move(shape));
    add(BufferRole::ObsLogical, "float32", {n, a, static_cast<std::size_t>(kLogicalLength)});
  } else if (mode_has_fused_obs(config.mode)) {
    add(BufferRole::ObsImage, "float32", image_shape(n, s.fused));
  }
  if (mode_has_state(config.mode)) add(BufferRole::StateImage, "float32", image_shape(n, s.fused));
  if (s.per_agent_rewards) {
    add(BufferRole::Rewards, "float32", {n, a});
  } else {
    add(BufferRole::Rewards, "float32", {n});
  }
  add(BufferRole::Terminated, "uint8", {n});
  add(BufferRole::Truncated, "uint8", {n});
  plan.total_bytes = round_up(cursor, kOutputAlign);
  return plan;
}

VecEnv::VecEnv(const MapSpec& spec, VecConfig config, std::span<std::byte> buffers)
    : config_(config) {
  plan_ = plan_buffers(spec, config_);
  const Shapes s = shapes_for(spec);
  n_agents_ = s.counts.n_agents;
  per_agent_rewards_ = s.per_agent_rewards;
  agent_image_floats_ = s.agent.image_floats();
  fused_image_floats_ = s.fused.image_floats();

  if (buffers.empty()) {
    owned_ = AlignedBuffer(plan_.total_bytes, kOutputAlign);
    buffer_ = owned_.bytes();
  } else {
    if (buffers.size() < plan_.total_bytes) {
      throw ContractError("caller buffer holds " + std::to_string(buffers.size()) +
                          " bytes, pool needs " + std::to_string(plan_.total_bytes));
    }
    if (reinterpret_cast<std::uintptr_t>(buffers.data()) % kOutputAlign != 0) {
      throw ContractError("caller buffer must be 64-byte aligned");
    }
    buffer_ = buffers.first(plan_.total_bytes);
  }

  auto span_of = [&](BufferRole role, auto* tag) {
    using T = std::remove_pointer_t<decltype(tag)>;
    const BufferDescriptor* d = plan_.find(role);
    if (!d) return std::span<T>{};
    return std::span<T>(reinterpret_cast<T*>(buffer_.data() + d->offset), d->extent / sizeof(T));
  };
  outputs_.obs_image = span_of(BufferRole::ObsImage, static_cast<float*>(nullptr));
  outputs_.obs_logical = span_of(BufferRole::ObsLogical, static_cast<float*>(nullptr));
  outputs_.state_image = span_of(BufferRole::StateImage, static_cast<float*>(nullptr));
  outputs_.rewards = span_of(BufferRole::Rewards, static_cast<float*>(nullptr));
  outputs_.terminated = span_of(BufferRole::Terminated, static_cast<std::uint8_t*>(nullptr));
  outputs_.truncated = span_of(BufferRole::Truncated, static_cast<std::uint8_t*>(nullptr));

  ArenaOptions options;
  options.knowledge = knowledge_for(config_.mode);
  options.stride_alignment = config_.stride == StridePolicy::Padded ? kStrideAlignment : 8;
  options.zero_fill = false;
  arena_ = std::make_unique<EnvironmentArena>(spec, config_.n_envs, options);

  if (config_.stride == StridePolicy::Padded) {
    const std::size_t per_env[] = {
        outputs_.obs_image.size_bytes() / config_.n_envs,
        outputs_.obs_logical.size_bytes() / config_.n_envs,
        outputs_.state_image.size_bytes() / config_.n_envs,
        arena_->layout().env_stride,
    };
    block_ = block_for(per_env);
  } else {
    block_ = 1;
  }
  n_blocks_ = (config_.n_envs + block_ - 1) / block_;

  pool_ = std::make_unique<WorkerPool>(config_.n_workers, config_.wait_policy);
  slots_.resize(config_.n_envs);
  workers_.reserve(pool_->size());
  for (std::size_t w = 0; w < pool_->size(); ++w) {
    auto ws = std::make_unique<WorkerState>(arena_->layout());
    ws->records.reserve(config_.n_envs);
    if (per_agent_rewards_) ws->agent_rewards.reserve(config_.n_envs * n_agents_);
    if (config_.fill == FillStrategy::DiffSweep) {
      ws->before = AlignedBuffer(arena_->layout().env_stride, kStrideAlignment);
    }
    workers_.push_back(std::move(ws));
  }
  first_touch();
}

VecEnv::~VecEnv() { close(); }

void VecEnv::close() {
  if (closed_) return;
  closed_ = true;
  if (pool_) pool_->shutdown();
  pool_.reset();
  workers_.clear();
  slots_.clear();
  arena_.reset();
}

void VecEnv::require_open() const {
  if (closed_) throw ContractError("environment pool is closed");
}

std::size_t VecEnv::n_workers() const { return pool_ ? pool_->size() : 0; }

const EnvironmentArena& VecEnv::arena() const {
  require_open();
  return *arena_;
}

RngStream VecEnv::rng(std::size_t index) const {
  require_open();
  return slots_.at(index).rng;
}

ObsBuffers VecEnv::obs_buffers(std::size_t e) const {
  ObsBuffers b;
  const auto a = static_cast<std::size_t>(n_agents_);
  if (mode_has_agent_obs(config_.mode)) {
    b.agent_images = outputs_.obs_image.subspan(e * a * agent_image_floats_, a * agent_image_floats_);
    b.agent_logical = outputs_.obs_logical.subspan(e * a * kLogicalLength, a * kLogicalLength);
  } else if (mode_has_fused_obs(config_.mode)) {
    b.fused_image = outputs_.obs_image.subspan(e * fused_image_floats_, fused_image_floats_);
  }
  if (mode_has_state(config_.mode)) {
    b.state_image = outputs_.state_image.subspan(e * fused_image_floats_, fused_image_floats_);
  }
  return b;
}

void VecEnv::first_touch() {
  const std::size_t n = config_.n_envs;
  auto zero_block = [&](std::size_t block) {
    const std::size_t lo = block * block_;
    const std::size_t hi = std::min(n, lo + block_);
    for (std::size_t e = lo; e < hi; ++e) arena_->first_touch(e);
    auto zero = [&](auto span) {
      if (span.empty()) return;
      const std::size_t per = span.size() / n;
      std::memset(span.data() + lo * per, 0, (hi - lo) * per * sizeof(span[0]));
    };
    zero(outputs_.obs_image);
    zero(outputs_.obs_logical);
    zero(outputs_.state_image);
  };
  if (config_.init == InitPolicy::FirstTouch) {
    pool_->run(n_blocks_, [&](std::size_t block, std::size_t) { zero_block(block); });
  } else {
    for (std::size_t b = 0; b < n_blocks_; ++b) zero_block(b);
  }
  std::memset(outputs_.rewards.data(), 0, outputs_.rewards.size_bytes());
  std::memset(outputs_.terminated.data(), 0, outputs_.terminated.size());
  std::memset(outputs_.truncated.data(), 0, outputs_.truncated.size());
}

void VecEnv::reset_block(std::size_t block, std::size_t worker) {
  const WorldRules& rules = arena_->rules();
  WorkerState& ws = *workers_[worker];
  const std::size_t lo = block * block_;
  const std::size_t hi = std::min(config_.n_envs, lo + block_);
  const std::span<AgentAction> actions(ws.actions.data(), static_cast<std::size_t>(n_agents_));
  for (std::size_t e = lo; e < hi; ++e) {
    EnvSlot& slot = slots_[e];
    slot.rng = RngStream::for_env(config_.seed, e);
    arena_->reset_env(e, slot.rng);
    const EnvView env = arena_->env(e);
    if (config_.desync && rules.horizon > 1) {
      // Random pre-roll so episode boundaries are spread over the horizon.
      const std::uint32_t k = slot.rng.below(static_cast<std::uint32_t>(rules.horizon));
      for (std::uint32_t i = 0; i < k; ++i) {
        random_agent_actions(slot.rng, actions);
        const StepResult r = step_env(env, rules, actions, slot.rng, ws.scratch);
        if (r.terminated) {
          arena_->reset_env(e, slot.rng);
          break;
        }
      }
      auto counters = env.counters();
      for (int c = 1; c < kNumCounters; ++c) counters[c] = 0;
    }
    emit(env, rules, config_.mode, obs_buffers(e));
    slot.images_valid = true;
  }
}

const StepOutputs& VecEnv::reset() {
  require_open();
  pool_->run(n_blocks_, [&](std::size_t block, std::size_t worker) { reset_block(block, worker); });
  std::memset(outputs_.rewards.data(), 0, outputs_.rewards.size_bytes());
  std::memset(outputs_.terminated.data(), 0, outputs_.terminated.size());
  std::memset(outputs_.truncated.data(), 0, outputs_.truncated.size());
  return outputs_;
}

void VecEnv::step_block(std::size_t block, std::size_t worker,
                        std::span<const AgentAction> actions) {
  const WorldRules& rules = arena_->rules();
  WorkerState& ws = *workers_[worker];
  const auto a = static_cast<std::size_t>(n_agents_);
  const bool diff = config_.fill == FillStrategy::DiffSweep;
  const bool direct = config_.stride == StridePolicy::Unpadded;
  const std::size_t lo = block * block_;
  const std::size_t hi = std::min(config_.n_envs, lo + block_);

  for (std::size_t e = lo; e < hi; ++e) {
    EnvSlot& slot = slots_[e];
    const EnvView env = arena_->env(e);
    const bool patch = diff && slot.images_valid;
    if (patch) {
      // emit_diff never reads the old grid, so only entities onward are kept.
      const auto& l = arena_->layout();
      std::memcpy(ws.before.data() + l.offset_agents, env.base() + l.offset_agents,
                  l.raw_stride - l.offset_agents);
    }

    const StepResult r = step_env(env, rules, actions.subspan(e * a, a), slot.rng, ws.scratch);
    const bool done = r.terminated || r.truncated;

    const ObsBuffers out = obs_buffers(e);
    if (done && config_.auto_reset) {
      arena_->reset_env(e, slot.rng);
      emit(env, rules, config_.mode, out);
    } else if (patch) {
      emit_diff(EnvView(ws.before.data(), arena_->layout()), env, rules, config_.mode, out);
    } else {
      emit(env, rules, config_.mode, out);
    }
    slot.images_valid = true;

    if (direct) {
      if (per_agent_rewards_) {
        std::copy_n(r.agent_rewards.begin(), a, outputs_.rewards.begin() + e * a);
      } else {
        outputs_.rewards[e] = r.reward;
      }
      outputs_.terminated[e] = r.terminated;
      outputs_.truncated[e] = r.truncated;
    } else {
      ws.records.push_back({static_cast<std::uint32_t>(e), r.reward,
                            static_cast<std::uint8_t>(r.terminated),
                            static_cast<std::uint8_t>(r.truncated)});
      if (per_agent_rewards_) {
        ws.agent_rewards.insert(ws.agent_rewards.end(), r.agent_rewards.begin(),
                                r.agent_rewards.begin() + a);
      }
    }
  }
}

const StepOutputs& VecEnv::step(std::span<const AgentAction> actions) {
  require_open();
  const std::size_t expected = config_.n_envs * static_cast<std::size_t>(n_agents_);
  if (actions.size() != expected) {
    throw ContractError("expected " + std::to_string(expected) + " actions (" +
                        std::to_string(config_.n_envs) + " envs x " + std::to_string(n_agents_) +
                        " agents), got " + std::to_string(actions.size()));
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const std::int32_t t = actions[i].radio_target;
    if (t < 0 || t >= n_agents_) {
      throw ContractError("action " + std::to_string(i) + ": radio target " + std::to_string(t) +
                          " out of range");
    }
  }

  for (auto& ws : workers_) {
    ws->records.clear();
    ws->agent_rewards.clear();
  }
  pool_->run(n_blocks_, [&](std::size_t block, std::size_t worker) {
    step_block(block, worker, actions);
  });

  if (config_.stride == StridePolicy::Padded) {
    const auto a = static_cast<std::size_t>(n_agents_);
    for (const auto& ws : workers_) {
      for (std::size_t i = 0; i < ws->records.size(); ++i) {
        const auto& rec = ws->records[i];
        if (per_agent_rewards_) {
          std::copy_n(ws->agent_rewards.begin() + i * a, a, outputs_.rewards.begin() + rec.env * a);
        } else {
          outputs_.rewards[rec.env] = rec.reward;
        }
        outputs_.terminated[rec.env] = rec.terminated;
        outputs_.truncated[rec.env] = rec.truncated;
      }
    }
  }
  return outputs_;
}

}  // namespace hideseek
