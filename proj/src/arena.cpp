#include "hideseek/arena.hpp"

#include <cstring>
#include <new>
#include <string>

#include "hideseek/errors.hpp"

namespace hideseek {

AlignedBuffer::AlignedBuffer(std::size_t size, std::size_t alignment) : size_(size) {
  if (size == 0) return;
  void* p = ::operator new(round_up(size, alignment), std::align_val_t{alignment}, std::nothrow);
  if (p == nullptr) {
    throw ResourceError("failed to allocate " + std::to_string(size) + " bytes");
  }
  data_ = std::unique_ptr<std::byte[], Free>(static_cast<std::byte*>(p), Free{alignment});
}

void AlignedBuffer::Free::operator()(std::byte* p) const {
  ::operator delete(p, std::align_val_t{alignment});
}

WorldRules::WorldRules(const MapSpec& spec, const ArenaLayout& l)
    : layout(l), rewards(spec.rewards), dynamics(spec.dynamics), horizon(spec.horizon) {
  for (const auto& t : spec.tile_types) stuck_probability[t.id] = t.stuck_probability;

  for (const auto& a : spec.agents) {
    agent_spawns.push_back(a.spawn);
    std::vector<std::uint32_t> tiles;
    if (!a.spawn) {
      const float max_alt = half_to_float(float_to_half(a.max_alt));
      for (std::size_t i = 0; i < spec.type_grid.size(); ++i) {
        if (agent_can_enter(a.capabilities, max_alt, spec.type(spec.type_grid[i]))) {
          tiles.push_back(static_cast<std::uint32_t>(i));
        }
      }
    }
    agent_spawn_tiles.push_back(std::move(tiles));
  }
  for (const auto& p : spec.pois) poi_spawns.push_back(p.spawn);
  for (std::size_t i = 0; i < spec.type_grid.size(); ++i) {
    if (!spec.type(spec.type_grid[i]).blocking) poi_spawn_tiles.push_back(static_cast<std::uint32_t>(i));
  }
}

BeliefView EnvView::belief_block(int block) const {
  const auto& l = *layout_;
  std::byte* start = base_ + l.offset_knowledge + static_cast<std::size_t>(block) * l.belief_block_stride;
  BeliefView v;
  v.bits = reinterpret_cast<std::uint8_t*>(start);
  if (knowledge_has_records(l.knowledge)) {
    v.pois = reinterpret_cast<KnownEntity*>(start + l.belief_records_offset);
    v.agents = v.pois + l.counts.n_pois;
  }
  return v;
}

BeliefView EnvView::belief(int agent) const {
  return belief_block(knowledge_is_shared(layout_->knowledge) ? 0 : agent);
}

std::vector<std::byte> build_pristine(const MapSpec& spec, const ArenaLayout& layout) {
  std::vector<std::byte> bytes(layout.env_stride, std::byte{0});
  EnvView env(bytes.data(), layout);

  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const TileTypeDef& t = spec.type(spec.type_at(x, y));
      TileFlags f;
      f.walkable = t.walkable;
      f.flyable = t.flyable;
      f.aquatic = t.aquatic;
      f.blocking = t.blocking;
      f.type_id = static_cast<std::uint8_t>(t.id);
      Tile& tile = env.tile(x, y);
      tile.flags = pack_tile_flags(f);
      tile.altitude = t.altitude;
    }
  }

  for (const auto& a : spec.agents) {
    AgentState& s = env.agents()[a.index];
    s.view_range = a.view_range;
    s.deployment_remaining = a.deployment;
    s.flags = a.capabilities & agent_bits::kCapabilities;
    s.set_max_alt(a.max_alt);
    if (a.spawn) {
      s.x = static_cast<float>(a.spawn->first) + 0.5f;
      s.y = static_cast<float>(a.spawn->second) + 0.5f;
      s.last_x = static_cast<std::uint16_t>(a.spawn->first);
      s.last_y = static_cast<std::uint16_t>(a.spawn->second);
    }
  }
  for (const auto& p : spec.pois) {
    POIState& s = env.pois()[p.index];
    s.state_flags = (p.savable_by & poi_bits::kSavableMask) | (p.moves ? poi_bits::kMoves : 0u);
    if (p.spawn) {
      s.x = static_cast<float>(p.spawn->first) + 0.5f;
      s.y = static_cast<float>(p.spawn->second) + 0.5f;
      s.last_x = static_cast<std::uint16_t>(p.spawn->first);
      s.last_y = static_cast<std::uint16_t>(p.spawn->second);
    }
  }

  auto speeds = env.speeds();
  std::copy(spec.speeds.begin(), spec.speeds.end(), speeds.begin());
  return bytes;
}

void reset_from_pristine(const EnvView& env, std::span<const std::byte> pristine,
                         const WorldRules& rules, RngStream& rng) {
  const auto& l = env.layout();
  std::memcpy(env.base(), pristine.data(), l.raw_stride);

  const auto width = static_cast<std::uint32_t>(l.counts.width);
  auto agents = env.agents();
  for (std::size_t a = 0; a < agents.size(); ++a) {
    if (rules.agent_spawns[a]) continue;
    const auto& tiles = rules.agent_spawn_tiles[a];
    const std::uint32_t tile = tiles[rng.below(static_cast<std::uint32_t>(tiles.size()))];
    const auto tx = tile % width;
    const auto ty = tile / width;
    agents[a].x = static_cast<float>(tx) + 0.5f;
    agents[a].y = static_cast<float>(ty) + 0.5f;
    agents[a].last_x = static_cast<std::uint16_t>(tx);
    agents[a].last_y = static_cast<std::uint16_t>(ty);
  }
  auto pois = env.pois();
  for (std::size_t p = 0; p < pois.size(); ++p) {
    if (rules.poi_spawns[p]) continue;
    const auto& tiles = rules.poi_spawn_tiles;
    const std::uint32_t tile = tiles[rng.below(static_cast<std::uint32_t>(tiles.size()))];
    const auto tx = tile % width;
    const auto ty = tile / width;
    pois[p].x = static_cast<float>(tx) + 0.5f;
    pois[p].y = static_cast<float>(ty) + 0.5f;
    pois[p].last_x = static_cast<std::uint16_t>(tx);
    pois[p].last_y = static_cast<std::uint16_t>(ty);
  }
}

EnvironmentArena::EnvironmentArena(const MapSpec& spec, std::size_t n_envs, ArenaOptions options)
    : n_envs_(n_envs) {
  if (n_envs == 0) throw ValidationError("n_envs must be >= 1");
  validate_map_spec(spec);
  const ArenaLayout layout =
      compute_layout(spec.counts(), options.knowledge, options.stride_alignment);
  rules_ = WorldRules(spec, layout);

  memory_ = AlignedBuffer(n_envs * layout.env_stride, kStrideAlignment);
  const auto pristine = build_pristine(spec, layout);
  pristine_ = AlignedBuffer(pristine.size(), kStrideAlignment);
  std::memcpy(pristine_.data(), pristine.data(), pristine.size());

  if (options.zero_fill) {
    for (std::size_t i = 0; i < n_envs; ++i) first_touch(i);
  }
}

std::span<std::byte> EnvironmentArena::region(std::size_t index) const {
  const std::size_t stride = rules_.layout.env_stride;
  return {memory_.data() + index * stride, stride};
}

EnvView EnvironmentArena::env(std::size_t index) const {
  return EnvView(memory_.data() + index * rules_.layout.env_stride, rules_.layout);
}

void EnvironmentArena::first_touch(std::size_t index) const {
  auto r = region(index);
  std::memset(r.data(), 0, r.size());
}

void EnvironmentArena::reset_env(std::size_t index, RngStream& rng) const {
  reset_from_pristine(env(index), pristine_.bytes(), rules_, rng);
}

}  // namespace hideseek
