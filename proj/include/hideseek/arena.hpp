#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hideseek/layout.hpp"
#include "hideseek/map_spec.hpp"
#include "hideseek/rng.hpp"

namespace hideseek {

// Owning, uninitialized, over-aligned byte allocation. Pages are not touched
// here so that the first write decides their placement.
class AlignedBuffer {
 public:
  AlignedBuffer() = default;
  AlignedBuffer(std::size_t size, std::size_t alignment);

  std::byte* data() const { return data_.get(); }
  std::size_t size() const { return size_; }
  std::span<std::byte> bytes() const { return {data_.get(), size_}; }
  explicit operator bool() const { return data_ != nullptr; }

 private:
  struct Free {
    std::size_t alignment;
    void operator()(std::byte* p) const;
  };
  std::unique_ptr<std::byte[], Free> data_{nullptr, Free{1}};
  std::size_t size_ = 0;
};

// Read-only rules shared by every environment built from one MapSpec.
struct WorldRules {
  ArenaLayout layout;
  RewardConfig rewards;
  DynamicsConfig dynamics;
  int horizon = 0;
  std::array<float, kMaxTileTypes> stuck_probability{};
  std::vector<Spawn> agent_spawns;
  std::vector<Spawn> poi_spawns;
  // Candidate tiles (y * W + x) for "random" spawns, per agent and for POIs.
  std::vector<std::vector<std::uint32_t>> agent_spawn_tiles;
  std::vector<std::uint32_t> poi_spawn_tiles;

  WorldRules() = default;
  WorldRules(const MapSpec& spec, const ArenaLayout& layout);
};

// Typed accessors over one environment's bytes. Shallow-const, like span.
struct BeliefView {
  std::uint8_t* bits = nullptr;
  KnownEntity* pois = nullptr;    // null without records
  KnownEntity* agents = nullptr;  // null without records

  bool knows(std::size_t tile) const { return (bits[tile >> 3] >> (tile & 7)) & 1u; }
  void learn(std::size_t tile) const { bits[tile >> 3] |= static_cast<std::uint8_t>(1u << (tile & 7)); }
  bool has_records() const { return pois != nullptr; }
};

class EnvView {
 public:
  EnvView(std::byte* base, const ArenaLayout& layout) : base_(base), layout_(&layout) {}

  const ArenaLayout& layout() const { return *layout_; }
  int width() const { return layout_->counts.width; }
  int height() const { return layout_->counts.height; }
  int n_agents() const { return layout_->counts.n_agents; }
  int n_pois() const { return layout_->counts.n_pois; }
  int n_types() const { return layout_->counts.n_types; }

  std::span<Tile> grid() const { return {at<Tile>(layout_->offset_grid), layout_->tiles()}; }
  Tile& tile(int x, int y) const { return grid()[static_cast<std::size_t>(y) * width() + x]; }
  std::span<AgentState> agents() const {
    return {at<AgentState>(layout_->offset_agents), static_cast<std::size_t>(n_agents())};
  }
  std::span<POIState> pois() const {
    return {at<POIState>(layout_->offset_pois), static_cast<std::size_t>(n_pois())};
  }
  std::span<float> speeds() const {
    return {at<float>(layout_->offset_speeds),
            static_cast<std::size_t>(n_agents()) * static_cast<std::size_t>(n_types())};
  }
  float speed(int agent, int type_id) const { return speeds()[agent * n_types() + type_id]; }
  std::span<std::int32_t, kNumCounters> counters() const {
    return std::span<std::int32_t, kNumCounters>(at<std::int32_t>(layout_->offset_counters),
                                                 kNumCounters);
  }

  bool has_knowledge() const { return layout_->belief_blocks > 0; }
  // Block used by an agent; every agent maps to block 0 in shared modes.
  BeliefView belief(int agent) const;
  BeliefView belief_block(int block) const;

  std::span<std::byte> bytes() const { return {base_, layout_->raw_stride}; }
  std::byte* base() const { return base_; }

 private:
  template <typename T>
  T* at(std::size_t offset) const {
    return reinterpret_cast<T*>(base_ + offset);
  }

  std::byte* base_;
  const ArenaLayout* layout_;
};

struct ArenaOptions {
  KnowledgeMode knowledge = KnowledgeMode::PerAgentBeliefs;
  std::size_t stride_alignment = kStrideAlignment;
  // When false the caller must call first_touch() for every env before use.
  bool zero_fill = true;
};

// Static initial bytes of one environment (env_stride long): packed grid,
// speeds, zero knowledge and counters, entity slots holding placeholders.
std::vector<std::byte> build_pristine(const MapSpec& spec, const ArenaLayout& layout);

class EnvironmentArena {
 public:
  EnvironmentArena(const MapSpec& spec, std::size_t n_envs, ArenaOptions options = {});

  EnvironmentArena(const EnvironmentArena&) = delete;
  EnvironmentArena& operator=(const EnvironmentArena&) = delete;
  EnvironmentArena(EnvironmentArena&&) = default;
  EnvironmentArena& operator=(EnvironmentArena&&) = default;

  std::size_t n_envs() const { return n_envs_; }
  const ArenaLayout& layout() const { return rules_.layout; }
  const WorldRules& rules() const { return rules_; }
  std::span<const std::byte> pristine() const { return pristine_.bytes(); }
  std::span<std::byte> slab() const { return memory_.bytes(); }

  EnvView env(std::size_t index) const;
  std::span<std::byte> region(std::size_t index) const;

  // Zero-fills one env stride (padding included).
  void first_touch(std::size_t index) const;

  // Bulk copy of the pristine bytes, then entity placement drawn from rng.
  // Performs no allocation.
  void reset_env(std::size_t index, RngStream& rng) const;

 private:
  WorldRules rules_;
  std::size_t n_envs_;
  AlignedBuffer memory_;
  AlignedBuffer pristine_;
};

inline EnvironmentArena allocate_arena(const MapSpec& spec, std::size_t n_envs,
                                       ArenaOptions options = {}) {
  return EnvironmentArena(spec, n_envs, options);
}

// Copies the pristine template into `env` and places agents and POIs.
void reset_from_pristine(const EnvView& env, std::span<const std::byte> pristine,
                         const WorldRules& rules, RngStream& rng);

}  // namespace hideseek
