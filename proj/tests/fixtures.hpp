#pragma once

#include <string>

#include "hideseek/map_spec.hpp"
#include "hideseek/rng.hpp"

namespace fixtures {

using namespace hideseek;

inline const std::string kData = HIDESEEK_DATA_DIR;

// Flat map, every tile walkable and flyable; agents and POIs at fixed tiles.
inline MapSpec open_map(int w, int h, int n_agents = 1, int n_pois = 1) {
  MapSpec s;
  s.width = w;
  s.height = h;
  s.tile_types = {{0, {255, 255, 255}, true, true, false, false, false, 0.0f, 0.0f}};
  s.type_grid.assign(static_cast<std::size_t>(w) * h, 0);
  for (int a = 0; a < n_agents; ++a) {
    AgentDef d;
    d.index = a;
    d.capabilities = agent_bits::kWalk;
    d.view_range = 2.0f;
    d.spawn = std::make_pair(a % w, 0);
    s.agents.push_back(d);
  }
  s.speeds.assign(static_cast<std::size_t>(n_agents), 1.0f);
  for (int p = 0; p < n_pois; ++p) {
    POIDef d;
    d.index = p;
    d.spawn = std::make_pair(w - 1 - p % w, h - 1);
    d.savable_by = (1u << n_agents) - 1u;
    s.pois.push_back(d);
  }
  return s;
}

// Appends a tile type and widens the speeds matrix (new column = speed).
inline void add_type(MapSpec& s, TileTypeDef t, float speed = 1.0f) {
  const int old = s.n_types();
  std::vector<float> speeds;
  for (int a = 0; a < s.n_agents(); ++a) {
    for (int k = 0; k < old; ++k) speeds.push_back(s.speeds[a * old + k]);
    speeds.push_back(speed);
  }
  s.tile_types.push_back(t);
  s.speeds = std::move(speeds);
}

// 16x16 mixed terrain, 3 heterogeneous agents, 2 POIs (one wandering),
// random spawns, a delayed agent and sticky forest.
inline MapSpec oracle_map(std::uint64_t seed, int size = 16) {
  MapSpec s;
  s.width = size;
  s.height = size;
  s.tile_types = {
      {0, {200, 200, 200}, true, true, false, false, false, 0.0f, 0.0f},
      {1, {0, 120, 0}, true, true, false, false, false, 3.0f, 0.3f},
      {2, {0, 0, 200}, false, true, true, false, false, 0.0f, 0.0f},
      {3, {50, 50, 50}, false, false, false, true, false, 9.0f, 0.0f},
      {4, {120, 80, 40}, false, true, false, false, false, 7.0f, 0.0f},
  };
  RngStream rng = RngStream::for_env(seed, 99);
  s.type_grid.resize(static_cast<std::size_t>(size) * size);
  for (auto& c : s.type_grid) {
    const float u = rng.uniform01();
    c = u < 0.10f ? 3 : u < 0.2f ? 2 : u < 0.35f ? 1 : u < 0.42f ? 4 : 0;
  }
  s.type_grid[0] = 0;
  const std::uint8_t caps[3] = {agent_bits::kWalk, agent_bits::kFly,
                                static_cast<std::uint8_t>(agent_bits::kWalk | agent_bits::kSwim)};
  for (int a = 0; a < 3; ++a) {
    AgentDef d;
    d.index = a;
    d.capabilities = caps[a];
    d.view_range = 2.5f + static_cast<float>(a);
    d.max_alt = 5.0f;
    d.deployment = a == 2 ? 3.0f : 0.0f;
    if (a == 0) d.spawn = std::make_pair(0, 0);
    s.agents.push_back(d);
  }
  s.speeds = {1.0f, 0.5f, 0.0f, 0.0f, 0.0f,  //
              0.8f, 0.8f, 1.0f, 0.0f, 0.6f,  //
              0.7f, 0.4f, 0.3f, 0.0f, 0.0f};
  for (int p = 0; p < 2; ++p) {
    POIDef d;
    d.index = p;
    d.moves = p == 1;
    d.savable_by = p == 0 ? 0b111u : 0b101u;
    s.pois.push_back(d);
  }
  s.horizon = 200;
  s.dynamics.rescue_radius = 1.5f;
  s.dynamics.save_radius = 1.0f;
  validate_map_spec(s);
  return s;
}

}  // namespace fixtures
