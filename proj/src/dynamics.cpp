#include "hideseek/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "hideseek/errors.hpp"

namespace hideseek {

namespace {

bool agent_fits(const EnvView& env, const AgentState& s, float x, float y) {
  if (!(x >= 0.0f) || !(y >= 0.0f) || !(x < static_cast<float>(env.width())) ||
      !(y < static_cast<float>(env.height()))) {
    return false;
  }
  const Tile& t = env.tile(tile_coord(x), tile_coord(y));
  return agent_can_enter(s.flags, s.max_alt(), t.flags, t.altitude);
}

bool poi_fits(const EnvView& env, float x, float y) {
  if (!(x >= 0.0f) || !(y >= 0.0f) || !(x < static_cast<float>(env.width())) ||
      !(y < static_cast<float>(env.height()))) {
    return false;
  }
  return !env.tile(tile_coord(x), tile_coord(y)).has(tile_bits::kBlocking);
}

// Integer line walk between tile centers; only the tiles strictly between the
// endpoints can occlude.
bool line_clear(const EnvView& env, int ox, int oy, int tx, int ty, float threshold) {
  const int dx = std::abs(tx - ox);
  const int dy = -std::abs(ty - oy);
  const int sx = ox < tx ? 1 : -1;
  const int sy = oy < ty ? 1 : -1;
  int err = dx + dy;
  int x = ox;
  int y = oy;
  while (x != tx || y != ty) {
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
    if (x == tx && y == ty) break;
    const Tile& t = env.tile(x, y);
    if (t.has(tile_bits::kBlocking) || t.altitude > threshold) return false;
  }
  return true;
}

float distance_sq(float ax, float ay, float bx, float by) {
  const float dx = ax - bx;
  const float dy = ay - by;
  return dx * dx + dy * dy;
}

KnownEntity sighting(float x, float y, std::uint32_t stamp) {
  return {static_cast<std::uint16_t>(tile_coord(x)), static_cast<std::uint16_t>(tile_coord(y)),
          stamp};
}

}  // namespace

StepScratch::StepScratch(const ArenaLayout& layout)
    : tiles_(layout.tiles() * static_cast<std::size_t>(layout.counts.n_agents)),
      stride_(layout.tiles()) {}

float effective_speed(const EnvView& env, int agent) {
  const AgentState& s = env.agents()[agent];
  if (s.stuck()) return 0.0f;
  return env.speed(agent, env.tile(tile_coord(s.x), tile_coord(s.y)).type_id());
}

void apply_move(const EnvView& env, int agent, float ax, float ay) {
  AgentState& s = env.agents()[agent];
  const float speed = effective_speed(env, agent);
  s.last_x = static_cast<std::uint16_t>(tile_coord(s.x));
  s.last_y = static_cast<std::uint16_t>(tile_coord(s.y));
  const float nx = s.x + ax * speed;
  if (agent_fits(env, s, nx, s.y)) s.x = nx;
  const float ny = s.y + ay * speed;
  if (agent_fits(env, s, s.x, ny)) s.y = ny;
}

void stuck_and_rescue(const EnvView& env, const WorldRules& rules, std::uint32_t entered,
                      RngStream& rng) {
  auto agents = env.agents();
  const int n = env.n_agents();
  for (int a = 0; a < n; ++a) {
    if (!(entered >> a & 1u)) continue;
    AgentState& s = agents[a];
    const float p = rules.stuck_probability[env.tile(tile_coord(s.x), tile_coord(s.y)).type_id()];
    if (rng.bernoulli(p)) s.flags |= agent_bits::kStuck;
  }

  std::uint32_t free_helpers = 0;
  for (int a = 0; a < n; ++a) {
    if (agents[a].deployed() && !agents[a].stuck()) free_helpers |= 1u << a;
  }
  const float r2 = rules.dynamics.rescue_radius * rules.dynamics.rescue_radius;
  for (int a = 0; a < n; ++a) {
    AgentState& s = agents[a];
    if (!s.stuck()) continue;
    for (int j = 0; j < n; ++j) {
      if (j == a || !(free_helpers >> j & 1u)) continue;
      if (distance_sq(s.x, s.y, agents[j].x, agents[j].y) <= r2) {
        s.flags &= static_cast<std::uint8_t>(~agent_bits::kStuck);
        break;
      }
    }
  }
}

float view_radius(const EnvView& env, const WorldRules& rules, int agent) {
  const AgentState& s = env.agents()[agent];
  const float alt = env.tile(tile_coord(s.x), tile_coord(s.y)).altitude;
  return s.view_range * (1.0f + alt / rules.dynamics.alt_scale);
}

bool tile_visible(const EnvView& env, const WorldRules& rules, int agent, int tx, int ty) {
  const AgentState& s = env.agents()[agent];
  const int ox = tile_coord(s.x);
  const int oy = tile_coord(s.y);
  const float radius = view_radius(env, rules, agent);
  const int dx = tx - ox;
  const int dy = ty - oy;
  if (static_cast<float>(dx * dx + dy * dy) > radius * radius) return false;
  const float threshold = env.tile(ox, oy).altitude + rules.dynamics.eye_height;
  return line_clear(env, ox, oy, tx, ty, threshold);
}

std::span<const std::uint32_t> compute_visibility(const EnvView& env, const WorldRules& rules,
                                                  int agent, StepScratch& scratch) {
  const AgentState& s = env.agents()[agent];
  const int ox = tile_coord(s.x);
  const int oy = tile_coord(s.y);
  const float radius = view_radius(env, rules, agent);
  const float r2 = radius * radius;
  const int reach = static_cast<int>(std::floor(radius));
  const float threshold = env.tile(ox, oy).altitude + rules.dynamics.eye_height;
  const std::uint32_t bit = 1u << (tile_bits::kVisibilityShift + agent);

  const int x0 = std::max(0, ox - reach);
  const int x1 = std::min(env.width() - 1, ox + reach);
  const int y0 = std::max(0, oy - reach);
  const int y1 = std::min(env.height() - 1, oy + reach);

  std::uint32_t* out = scratch.tiles_.data() + static_cast<std::size_t>(agent) * scratch.stride_;
  std::size_t count = 0;
  auto grid = env.grid();
  for (int y = y0; y <= y1; ++y) {
    const int dy = y - oy;
    for (int x = x0; x <= x1; ++x) {
      const int dx = x - ox;
      if (static_cast<float>(dx * dx + dy * dy) > r2) continue;
      if (!line_clear(env, ox, oy, x, y, threshold)) continue;
      const auto index = static_cast<std::uint32_t>(y * env.width() + x);
      grid[index].flags |= bit;
      out[count++] = index;
    }
  }
  scratch.counts_[agent] = count;
  return {out, count};
}

void radio_broadcast(const EnvView& env, int sender, int target,
                     std::span<const std::uint32_t> sender_visible) {
  if (sender == target || !env.has_knowledge()) return;
  const BeliefView from = env.belief(sender);
  const BeliefView to = env.belief(target);
  if (from.bits == to.bits) return;

  for (std::uint32_t tile : sender_visible) to.learn(tile);
  if (!from.has_records()) return;
  for (int p = 0; p < env.n_pois(); ++p) {
    if (from.pois[p].stamp > to.pois[p].stamp) to.pois[p] = from.pois[p];
  }
  for (int a = 0; a < env.n_agents(); ++a) {
    if (from.agents[a].stamp > to.agents[a].stamp) to.agents[a] = from.agents[a];
  }
}

PoiUpdate poi_update(const EnvView& env, const WorldRules& rules, RngStream& rng) {
  PoiUpdate result;
  auto agents = env.agents();
  auto counters = env.counters();
  const int n_agents = env.n_agents();
  const float save_r2 = rules.dynamics.save_radius * rules.dynamics.save_radius;

  for (POIState& p : env.pois()) {
    if (p.saved()) continue;
    const int px = tile_coord(p.x);
    const int py = tile_coord(p.y);

    if (!p.found()) {
      for (int a = 0; a < n_agents; ++a) {
        if (!agents[a].deployed() || !tile_visible(env, rules, a, px, py)) continue;
        p.state_flags |= poi_bits::kFound;
        ++result.newly_found;
        ++result.found_by[a];
        ++counters[kPoisFound];
        break;
      }
    }
    if (p.found()) {
      const std::uint32_t savers = p.savable_by();
      for (int a = 0; a < n_agents; ++a) {
        if (!(savers >> a & 1u) || !agents[a].deployed()) continue;
        if (distance_sq(agents[a].x, agents[a].y, p.x, p.y) > save_r2) continue;
        p.state_flags |= poi_bits::kSaved;
        ++result.newly_saved;
        ++result.saved_by[a];
        ++counters[kPoisSaved];
        break;
      }
    }
    if (p.moves() && !p.saved()) {
      const float step = rules.dynamics.poi_speed;
      float nx = p.x;
      float ny = p.y;
      switch (rng.below(4)) {
        case 0: nx += step; break;
        case 1: nx -= step; break;
        case 2: ny += step; break;
        default: ny -= step; break;
      }
      p.last_x = static_cast<std::uint16_t>(px);
      p.last_y = static_cast<std::uint16_t>(py);
      if (poi_fits(env, nx, ny)) {
        p.x = nx;
        p.y = ny;
      }
    }
  }
  return result;
}

StepResult step_env(const EnvView& env, const WorldRules& rules,
                    std::span<const AgentAction> actions, RngStream& rng, StepScratch& scratch) {
  const int n_agents = env.n_agents();
  if (actions.size() != static_cast<std::size_t>(n_agents)) {
    throw ContractError("step_env: expected " + std::to_string(n_agents) + " actions, got " +
                        std::to_string(actions.size()));
  }
  for (const auto& act : actions) {
    if (act.radio_target < 0 || act.radio_target >= n_agents) {
      throw ContractError("step_env: radio target " + std::to_string(act.radio_target) +
                          " out of range");
    }
  }

  auto agents = env.agents();
  auto counters = env.counters();
  auto grid = env.grid();
  const auto stamp = static_cast<std::uint32_t>(++counters[kStepsElapsed]);

  std::uint32_t deployed = 0;
  for (int a = 0; a < n_agents; ++a) {
    AgentState& s = agents[a];
    if (s.deployment_remaining > 0.0f) {
      s.deployment_remaining = std::max(0.0f, s.deployment_remaining - 1.0f);
    }
    if (s.deployed()) deployed |= 1u << a;
  }

  std::uint32_t entered = 0;
  for (int a = 0; a < n_agents; ++a) {
    if (!(deployed >> a & 1u)) continue;
    AgentState& s = agents[a];
    const int tx = tile_coord(s.x);
    const int ty = tile_coord(s.y);
    apply_move(env, a, clamp_axis(actions[a].ax), clamp_axis(actions[a].ay));
    if (tile_coord(s.x) != tx || tile_coord(s.y) != ty) entered |= 1u << a;
  }

  stuck_and_rescue(env, rules, entered, rng);

  StepResult result;
  std::array<int, kMaxAgents> tiles_by{};
  const bool knowledge = env.has_knowledge();
  for (int a = 0; a < n_agents; ++a) {
    if (!(deployed >> a & 1u)) {
      scratch.counts_[a] = 0;
      continue;
    }
    const auto visible = compute_visibility(env, rules, a, scratch);
    const BeliefView belief = knowledge ? env.belief(a) : BeliefView{};
    for (std::uint32_t tile : visible) {
      Tile& t = grid[tile];
      if (!t.has(tile_bits::kGlobalObserved)) {
        t.flags |= tile_bits::kGlobalObserved;
        ++result.newly_observed;
        ++tiles_by[a];
      }
      if (knowledge) belief.learn(tile);
    }
  }
  counters[kTilesDiscovered] += result.newly_observed;

  if (knowledge && env.belief(0).has_records()) {
    auto pois = env.pois();
    for (int a = 0; a < n_agents; ++a) {
      if (!(deployed >> a & 1u)) continue;
      const BeliefView belief = env.belief(a);
      belief.agents[a] = sighting(agents[a].x, agents[a].y, stamp);
      for (int j = 0; j < n_agents; ++j) {
        if (j == a || !(deployed >> j & 1u)) continue;
        if (tile_visible(env, rules, a, tile_coord(agents[j].x), tile_coord(agents[j].y))) {
          belief.agents[j] = sighting(agents[j].x, agents[j].y, stamp);
        }
      }
      for (int p = 0; p < env.n_pois(); ++p) {
        if (pois[p].saved()) continue;
        if (tile_visible(env, rules, a, tile_coord(pois[p].x), tile_coord(pois[p].y))) {
          belief.pois[p] = sighting(pois[p].x, pois[p].y, stamp);
        }
      }
    }
  }

  for (int a = 0; a < n_agents; ++a) {
    if (!(deployed >> a & 1u)) continue;
    radio_broadcast(env, a, actions[a].radio_target, scratch.visible(a));
  }

  const PoiUpdate pois = poi_update(env, rules, rng);
  result.newly_found = pois.newly_found;
  result.newly_saved = pois.newly_saved;

  const RewardConfig& r = rules.rewards;
  const float tile_reward = r.tile * static_cast<float>(result.newly_observed);
  const float found_reward = r.found * static_cast<float>(result.newly_found);
  const float saved_reward = r.saved * static_cast<float>(result.newly_saved);
  result.reward = tile_reward + found_reward + saved_reward;
  for (int a = 0; a < n_agents; ++a) {
    result.agent_rewards[a] = r.tile * static_cast<float>(tiles_by[a]) +
                              r.found * static_cast<float>(pois.found_by[a]) +
                              r.saved * static_cast<float>(pois.saved_by[a]);
  }

  result.terminated = std::all_of(env.pois().begin(), env.pois().end(),
                                  [](const POIState& p) { return p.saved(); });
  result.truncated = !result.terminated && counters[kStepsElapsed] >= rules.horizon;
  return result;
}

void random_agent_actions(RngStream& rng, std::span<AgentAction> out) {
  const auto n = static_cast<std::uint32_t>(out.size());
  for (AgentAction& act : out) {
    act.ax = rng.uniform_pm1();
    act.ay = rng.uniform_pm1();
    act.radio_target = static_cast<std::int32_t>(rng.below(n));
  }
}

}  // namespace hideseek
