#pragma once

// One environment step. Phase order is fixed and agent loops run in ascending
// index order:
//
//   deployment countdown -> moves -> stuck/rescue -> visibility and discovery
//   -> radio -> POI find/save/move -> termination
//
// Every stochastic draw comes from the environment's own RngStream, so a step
// is a pure function of (env bytes, actions, rng state).

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hideseek/arena.hpp"
#include "hideseek/layout.hpp"
#include "hideseek/rng.hpp"

namespace hideseek {

struct AgentAction {
  float ax = 0.0f;
  float ay = 0.0f;
  std::int32_t radio_target = 0;  // == own index: no broadcast
};
static_assert(sizeof(AgentAction) == 12);

struct StepResult {
  float reward = 0.0f;
  bool terminated = false;
  bool truncated = false;
  int newly_observed = 0;
  int newly_found = 0;
  int newly_saved = 0;
  std::array<float, kMaxAgents> agent_rewards{};
};

// Per-worker scratch: the tiles each agent sees during the current step.
class StepScratch {
 public:
  explicit StepScratch(const ArenaLayout& layout);

  std::span<const std::uint32_t> visible(int agent) const {
    return {tiles_.data() + static_cast<std::size_t>(agent) * stride_, counts_[agent]};
  }

 private:
  friend std::span<const std::uint32_t> compute_visibility(const EnvView&, const WorldRules&, int,
                                                           StepScratch&);
  friend StepResult step_env(const EnvView&, const WorldRules&, std::span<const AgentAction>,
                             RngStream&, StepScratch&);
  std::vector<std::uint32_t> tiles_;
  std::size_t stride_ = 0;
  std::array<std::size_t, kMaxAgents> counts_{};
};

inline float clamp_axis(float v) {
  if (!(v == v)) return 0.0f;  // NaN
  return v < -1.0f ? -1.0f : (v > 1.0f ? 1.0f : v);
}

inline int tile_coord(float v) { return static_cast<int>(v); }

// speeds[agent][type of the tile under the agent], or 0 while stuck.
float effective_speed(const EnvView& env, int agent);

// Axis-separated move: x first, then y; an axis is cancelled if its
// destination is out of bounds, blocking, not enterable with the agent's
// capabilities, or above max_alt for a flight-only crossing.
void apply_move(const EnvView& env, int agent, float ax, float ay);

// Bernoulli sticking for agents that entered a new tile (entered bit per
// agent), then rescue of stuck agents with a free deployed teammate in range.
void stuck_and_rescue(const EnvView& env, const WorldRules& rules, std::uint32_t entered,
                      RngStream& rng);

float view_radius(const EnvView& env, const WorldRules& rules, int agent);
bool tile_visible(const EnvView& env, const WorldRules& rules, int agent, int tx, int ty);

// Tiles visible to a deployed agent this step; also sets the agent's bit in
// each visible tile's visibility mask.
std::span<const std::uint32_t> compute_visibility(const EnvView& env, const WorldRules& rules,
                                                  int agent, StepScratch& scratch);

// Target learns the sender's current view and adopts any newer POI/agent
// records. No-op when target == sender or both share one belief block.
void radio_broadcast(const EnvView& env, int sender, int target,
                     std::span<const std::uint32_t> sender_visible);

struct PoiUpdate {
  int newly_found = 0;
  int newly_saved = 0;
  // Lowest-index agent credited with each event, for per-agent attribution.
  std::array<int, kMaxAgents> found_by{};
  std::array<int, kMaxAgents> saved_by{};
};

PoiUpdate poi_update(const EnvView& env, const WorldRules& rules, RngStream& rng);

// Throws ContractError on action count mismatch or an out-of-range radio target.
StepResult step_env(const EnvView& env, const WorldRules& rules,
                    std::span<const AgentAction> actions, RngStream& rng, StepScratch& scratch);

// Uniform moves in [-1,1)^2 and uniform radio targets, written in place.
void random_agent_actions(RngStream& rng, std::span<AgentAction> out);

}  // namespace hideseek
