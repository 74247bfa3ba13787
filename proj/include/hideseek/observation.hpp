#pragma once

// Observation tensors, float32, memory order [channel, row, column]:
//
//   tile types     n_types one-hot planes
//   altitude       1
//   detected POIs  1
//   discovery map  1
//   self location  1                 (per-agent images only)
//   agents         n_agents-1 planes (per-agent: teammates)
//                  n_agents planes   (fused / true state: every agent)
//                  or 1 plane when other_agents_single_plane is set
//
// Per-agent images mask everything the agent does not know; fused images use
// the union of the team's knowledge; the true-state image masks nothing.

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "hideseek/arena.hpp"
#include "hideseek/layout.hpp"

namespace hideseek {

enum class ObsMode {
  DecentralizedNoState,
  DecentralizedWithState,
  CentralizedNoState,
  CentralizedWithState,
  StateOnly,
  Void,
};

inline constexpr int kLogicalLength = 6;

std::string_view to_string(ObsMode mode);
std::optional<ObsMode> parse_obs_mode(std::string_view text);

bool mode_has_agent_obs(ObsMode mode);
bool mode_has_fused_obs(ObsMode mode);
bool mode_has_state(ObsMode mode);
// Knowledge block the engine keeps for a mode.
KnowledgeMode knowledge_for(ObsMode mode);

struct ObsLayout {
  int width = 0;
  int height = 0;
  int tile_types = 0;
  int altitude = 0;
  int detected_pois = 0;
  int discovery = 0;
  int self_location = -1;  // -1 in fused/true-state images
  int agents = 0;          // first agent-location plane
  int agent_planes = 0;
  int n_channels = 0;

  std::size_t plane() const { return static_cast<std::size_t>(width) * height; }
  std::size_t image_floats() const { return plane() * n_channels; }

  static ObsLayout per_agent(const ArenaCounts& counts, bool single_agent_plane);
  static ObsLayout fused(const ArenaCounts& counts, bool single_agent_plane);
};

// Caller-owned destination buffers for one environment. Spans that a mode
// does not use may be empty.
struct ObsBuffers {
  std::span<float> agent_images;   // n_agents * per_agent image
  std::span<float> agent_logical;  // n_agents * kLogicalLength
  std::span<float> fused_image;
  std::span<float> state_image;
};

// Require per-agent knowledge. Throw ContractError on size mismatch.
void fill_decentralized(const EnvView& env, const WorldRules& rules, int agent,
                        std::span<float> image, std::span<float> logical);
// Union of all belief blocks (or the single shared block).
void fill_centralized(const EnvView& env, const WorldRules& rules, std::span<float> image);
void fill_true_state(const EnvView& env, const WorldRules& rules, std::span<float> image);

// Writes exactly the buffers the mode requires; Void writes nothing.
void emit(const EnvView& env, const WorldRules& rules, ObsMode mode, const ObsBuffers& buffers);

// Incremental variant: `before` is a copy of the env taken before the step
// (only agents, POIs and knowledge are read from it) and the buffers hold the
// images emitted for `before`. Only tiles whose knowledge changed and the
// entity cells that moved are rewritten. True-state images are refilled
// densely.
void emit_diff(const EnvView& before, const EnvView& after, const WorldRules& rules, ObsMode mode,
               const ObsBuffers& buffers);

}  // namespace hideseek
