#include "hideseek/observation.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <string>

#include "hideseek/dynamics.hpp"
#include "hideseek/errors.hpp"

namespace hideseek {

namespace {

constexpr std::array<std::pair<ObsMode, std::string_view>, 6> kModeNames{{
    {ObsMode::DecentralizedNoState, "decentralized"},
    {ObsMode::DecentralizedWithState, "decentralized_state"},
    {ObsMode::CentralizedNoState, "centralized"},
    {ObsMode::CentralizedWithState, "centralized_state"},
    {ObsMode::StateOnly, "state"},
    {ObsMode::Void, "void"},
}};

void check_size(std::span<float> buffer, std::size_t expected, const char* what) {
  if (buffer.size() != expected) {
    throw ContractError(std::string(what) + ": buffer holds " + std::to_string(buffer.size()) +
                        " floats, expected " + std::to_string(expected));
  }
}

bool single_plane(const WorldRules& rules) { return rules.dynamics.other_agents_single_plane; }

std::size_t cell_of(const EnvView& env, int x, int y) {
  return static_cast<std::size_t>(y) * env.width() + x;
}

std::size_t cell_of(const EnvView& env, float x, float y) {
  return cell_of(env, tile_coord(x), tile_coord(y));
}

// Writes type one-hot, altitude and discovery for the tiles set in `mask`
// (bit b of byte `byte_index` is tile byte_index*8+b).
void write_known_tiles(float* image, const ObsLayout& o, std::span<const Tile> grid,
                       std::size_t byte_index, unsigned mask) {
  const std::size_t plane = o.plane();
  while (mask != 0) {
    const int bit = std::countr_zero(mask);
    mask &= mask - 1;
    const std::size_t tile = byte_index * 8 + static_cast<std::size_t>(bit);
    if (tile >= plane) break;
    const Tile& t = grid[tile];
    image[(o.tile_types + t.type_id()) * plane + tile] = 1.0f;
    image[o.altitude * plane + tile] = t.altitude;
    image[o.discovery * plane + tile] = 1.0f;
  }
}

unsigned fused_known_byte(const EnvView& env, std::size_t i) {
  unsigned m = 0;
  for (int b = 0; b < env.layout().belief_blocks; ++b) m |= env.belief_block(b).bits[i];
  return m;
}

// Newest record of a POI across all belief blocks.
KnownEntity fused_poi_record(const EnvView& env, int poi) {
  KnownEntity best;
  for (int b = 0; b < env.layout().belief_blocks; ++b) {
    const KnownEntity& rec = env.belief_block(b).pois[poi];
    if (rec.stamp > best.stamp) best = rec;
  }
  return best;
}

template <typename Fn>
void per_agent_entity_cells(const EnvView& env, const ObsLayout& o, int agent, Fn&& fn) {
  const BeliefView belief = env.belief(agent);
  const auto agents = env.agents();
  fn(o.self_location, cell_of(env, agents[agent].x, agents[agent].y));
  if (!belief.has_records()) return;
  const auto pois = env.pois();
  for (int p = 0; p < env.n_pois(); ++p) {
    const KnownEntity& rec = belief.pois[p];
    if (rec.stamp != 0 && !pois[p].saved()) fn(o.detected_pois, cell_of(env, rec.x, rec.y));
  }
  int plane = o.agents;
  for (int j = 0; j < env.n_agents(); ++j) {
    if (j == agent) continue;
    const KnownEntity& rec = belief.agents[j];
    if (rec.stamp != 0) fn(plane, cell_of(env, rec.x, rec.y));
    if (o.agent_planes > 1) ++plane;
  }
}

template <typename Fn>
void fused_entity_cells(const EnvView& env, const ObsLayout& o, Fn&& fn) {
  const auto agents = env.agents();
  for (int a = 0; a < env.n_agents(); ++a) {
    fn(o.agent_planes > 1 ? o.agents + a : o.agents, cell_of(env, agents[a].x, agents[a].y));
  }
  if (!env.has_knowledge() || !env.belief_block(0).has_records()) return;
  const auto pois = env.pois();
  for (int p = 0; p < env.n_pois(); ++p) {
    const KnownEntity rec = fused_poi_record(env, p);
    if (rec.stamp != 0 && !pois[p].saved()) fn(o.detected_pois, cell_of(env, rec.x, rec.y));
  }
}

void write_logical(const EnvView& env, const WorldRules& rules, int agent, std::span<float> out) {
  const AgentState& s = env.agents()[agent];
  out[0] = s.x;
  out[1] = s.y;
  out[2] = s.view_range;
  out[3] = s.deployment_remaining;
  out[4] = s.stuck() ? 1.0f : 0.0f;
  out[5] = static_cast<float>(env.counters()[kStepsElapsed]) / static_cast<float>(rules.horizon);
}

void require_per_agent_knowledge(const EnvView& env) {
  if (!env.has_knowledge() || knowledge_is_shared(env.layout().knowledge)) {
    throw ContractError("per-agent observations need per-agent knowledge blocks");
  }
}

void require_knowledge(const EnvView& env) {
  if (!env.has_knowledge()) throw ContractError("fused observations need a knowledge block");
}

std::span<float> slice(std::span<float> all, std::size_t index, std::size_t size) {
  return all.subspan(index * size, size);
}

void refresh_decentralized(const EnvView& before, const EnvView& after, const WorldRules& rules,
                           int agent, std::span<float> image, std::span<float> logical) {
  const ObsLayout o = ObsLayout::per_agent(after.layout().counts, single_plane(rules));
  float* out = image.data();
  const std::size_t plane = o.plane();
  per_agent_entity_cells(before, o, agent,
                         [&](int channel, std::size_t cell) { out[channel * plane + cell] = 0.0f; });

  const BeliefView old_bits = before.belief(agent);
  const BeliefView new_bits = after.belief(agent);
  const auto grid = after.grid();
  for (std::size_t i = 0; i < after.layout().bitset_bytes; ++i) {
    const unsigned changed = new_bits.bits[i] & ~old_bits.bits[i] & 0xFFu;
    if (changed != 0) write_known_tiles(out, o, grid, i, changed);
  }
  per_agent_entity_cells(after, o, agent,
                         [&](int channel, std::size_t cell) { out[channel * plane + cell] = 1.0f; });
  write_logical(after, rules, agent, logical);
}

void refresh_centralized(const EnvView& before, const EnvView& after, const WorldRules& rules,
                         std::span<float> image) {
  const ObsLayout o = ObsLayout::fused(after.layout().counts, single_plane(rules));
  float* out = image.data();
  const std::size_t plane = o.plane();
  fused_entity_cells(before, o,
                     [&](int channel, std::size_t cell) { out[channel * plane + cell] = 0.0f; });
  const auto grid = after.grid();
  for (std::size_t i = 0; i < after.layout().bitset_bytes; ++i) {
    const unsigned changed = fused_known_byte(after, i) & ~fused_known_byte(before, i) & 0xFFu;
    if (changed != 0) write_known_tiles(out, o, grid, i, changed);
  }
  fused_entity_cells(after, o,
                     [&](int channel, std::size_t cell) { out[channel * plane + cell] = 1.0f; });
}

}  // namespace

std::string_view to_string(ObsMode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

std::optional<ObsMode> parse_obs_mode(std::string_view text) {
  for (const auto& [m, name] : kModeNames) {
    if (name == text) return m;
  }
  return std::nullopt;
}

bool mode_has_agent_obs(ObsMode mode) {
  return mode == ObsMode::DecentralizedNoState || mode == ObsMode::DecentralizedWithState;
}

bool mode_has_fused_obs(ObsMode mode) {
  return mode == ObsMode::CentralizedNoState || mode == ObsMode::CentralizedWithState;
}

bool mode_has_state(ObsMode mode) {
  return mode == ObsMode::DecentralizedWithState || mode == ObsMode::CentralizedWithState ||
         mode == ObsMode::StateOnly;
}

KnowledgeMode knowledge_for(ObsMode mode) {
  if (mode_has_agent_obs(mode)) return KnowledgeMode::PerAgentBeliefs;
  if (mode_has_fused_obs(mode)) return KnowledgeMode::SharedBeliefs;
  return KnowledgeMode::None;
}

ObsLayout ObsLayout::per_agent(const ArenaCounts& c, bool single_agent_plane) {
  ObsLayout o;
  o.width = c.width;
  o.height = c.height;
  o.tile_types = 0;
  o.altitude = c.n_types;
  o.detected_pois = o.altitude + 1;
  o.discovery = o.detected_pois + 1;
  o.self_location = o.discovery + 1;
  o.agents = o.self_location + 1;
  o.agent_planes = c.n_agents <= 1 ? 0 : (single_agent_plane ? 1 : c.n_agents - 1);
  o.n_channels = o.agents + o.agent_planes;
  return o;
}

ObsLayout ObsLayout::fused(const ArenaCounts& c, bool single_agent_plane) {
  ObsLayout o;
  o.width = c.width;
  o.height = c.height;
  o.tile_types = 0;
  o.altitude = c.n_types;
  o.detected_pois = o.altitude + 1;
  o.discovery = o.detected_pois + 1;
  o.self_location = -1;
  o.agents = o.discovery + 1;
  o.agent_planes = single_agent_plane ? 1 : c.n_agents;
  o.n_channels = o.agents + o.agent_planes;
  return o;
}

void fill_decentralized(const EnvView& env, const WorldRules& rules, int agent,
                        std::span<float> image, std::span<float> logical) {
  require_per_agent_knowledge(env);
  const ObsLayout o = ObsLayout::per_agent(env.layout().counts, single_plane(rules));
  check_size(image, o.image_floats(), "fill_decentralized image");
  check_size(logical, kLogicalLength, "fill_decentralized logical");

  std::fill(image.begin(), image.end(), 0.0f);
  float* out = image.data();
  const BeliefView belief = env.belief(agent);
  const auto grid = env.grid();
  for (std::size_t i = 0; i < env.layout().bitset_bytes; ++i) {
    const unsigned known = belief.bits[i];
    if (known != 0) write_known_tiles(out, o, grid, i, known);
  }
  const std::size_t plane = o.plane();
  per_agent_entity_cells(env, o, agent,
                         [&](int channel, std::size_t cell) { out[channel * plane + cell] = 1.0f; });
  write_logical(env, rules, agent, logical);
}

void fill_centralized(const EnvView& env, const WorldRules& rules, std::span<float> image) {
  require_knowledge(env);
  const ObsLayout o = ObsLayout::fused(env.layout().counts, single_plane(rules));
  check_size(image, o.image_floats(), "fill_centralized image");

  std::fill(image.begin(), image.end(), 0.0f);
  float* out = image.data();
  const auto grid = env.grid();
  for (std::size_t i = 0; i < env.layout().bitset_bytes; ++i) {
    const unsigned known = fused_known_byte(env, i);
    if (known != 0) write_known_tiles(out, o, grid, i, known);
  }
  const std::size_t plane = o.plane();
  fused_entity_cells(env, o,
                     [&](int channel, std::size_t cell) { out[channel * plane + cell] = 1.0f; });
}

void fill_true_state(const EnvView& env, const WorldRules& rules, std::span<float> image) {
  const ObsLayout o = ObsLayout::fused(env.layout().counts, single_plane(rules));
  check_size(image, o.image_floats(), "fill_true_state image");

  std::fill(image.begin(), image.end(), 0.0f);
  float* out = image.data();
  const std::size_t plane = o.plane();
  const auto grid = env.grid();
  for (std::size_t tile = 0; tile < plane; ++tile) {
    const Tile& t = grid[tile];
    out[(o.tile_types + t.type_id()) * plane + tile] = 1.0f;
    out[o.altitude * plane + tile] = t.altitude;
    if (t.has(tile_bits::kGlobalObserved)) out[o.discovery * plane + tile] = 1.0f;
  }
  for (const POIState& p : env.pois()) {
    if (!p.saved()) out[o.detected_pois * plane + cell_of(env, p.x, p.y)] = 1.0f;
  }
  const auto agents = env.agents();
  for (int a = 0; a < env.n_agents(); ++a) {
    const int channel = o.agent_planes > 1 ? o.agents + a : o.agents;
    out[channel * plane + cell_of(env, agents[a].x, agents[a].y)] = 1.0f;
  }
}

void emit(const EnvView& env, const WorldRules& rules, ObsMode mode, const ObsBuffers& buffers) {
  const auto& counts = env.layout().counts;
  if (mode_has_agent_obs(mode)) {
    const std::size_t image = ObsLayout::per_agent(counts, single_plane(rules)).image_floats();
    check_size(buffers.agent_images, image * counts.n_agents, "emit agent images");
    check_size(buffers.agent_logical, std::size_t{kLogicalLength} * counts.n_agents,
               "emit agent logical");
    for (int a = 0; a < counts.n_agents; ++a) {
      fill_decentralized(env, rules, a, slice(buffers.agent_images, a, image),
                         slice(buffers.agent_logical, a, kLogicalLength));
    }
  }
  if (mode_has_fused_obs(mode)) fill_centralized(env, rules, buffers.fused_image);
  if (mode_has_state(mode)) fill_true_state(env, rules, buffers.state_image);
}

void emit_diff(const EnvView& before, const EnvView& after, const WorldRules& rules, ObsMode mode,
               const ObsBuffers& buffers) {
  const auto& counts = after.layout().counts;
  if (mode_has_agent_obs(mode)) {
    require_per_agent_knowledge(after);
    const std::size_t image = ObsLayout::per_agent(counts, single_plane(rules)).image_floats();
    check_size(buffers.agent_images, image * counts.n_agents, "emit agent images");
    check_size(buffers.agent_logical, std::size_t{kLogicalLength} * counts.n_agents,
               "emit agent logical");
    for (int a = 0; a < counts.n_agents; ++a) {
      refresh_decentralized(before, after, rules, a, slice(buffers.agent_images, a, image),
                            slice(buffers.agent_logical, a, kLogicalLength));
    }
  }
  if (mode_has_fused_obs(mode)) {
    require_knowledge(after);
    check_size(buffers.fused_image, ObsLayout::fused(counts, single_plane(rules)).image_floats(),
               "emit fused image");
    refresh_centralized(before, after, rules, buffers.fused_image);
  }
  if (mode_has_state(mode)) fill_true_state(after, rules, buffers.state_image);
}

}  // namespace hideseek
