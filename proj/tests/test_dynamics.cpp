#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include "fixtures.hpp"
#include "hideseek/arena.hpp"
#include "hideseek/dynamics.hpp"
#include "hideseek/errors.hpp"
#include "reference.hpp"

using namespace hideseek;

namespace {

struct Harness {
  EnvironmentArena arena;
  StepScratch scratch;
  RngStream rng;

  explicit Harness(const MapSpec& s, KnowledgeMode k = KnowledgeMode::PerAgentBeliefs,
                   std::uint64_t seed = 0)
      : arena(s, 1, {k}), scratch(arena.layout()), rng(RngStream::for_env(seed, 0)) {
    arena.reset_env(0, rng);
  }
  EnvView env() const { return arena.env(0); }
  const WorldRules& rules() const { return arena.rules(); }
  StepResult step(std::vector<AgentAction> actions) {
    return step_env(env(), rules(), actions, rng, scratch);
  }
};

MapSpec corridor(int length, int n_agents, float view) {
  MapSpec s = fixtures::open_map(length, 1, n_agents, 1);
  for (auto& a : s.agents) a.view_range = view;
  return s;
}

std::vector<AgentAction> idle(int n) {
  std::vector<AgentAction> v(n);
  for (int i = 0; i < n; ++i) v[i].radio_target = i;
  return v;
}

int popcount_knowledge(const BeliefView& b, std::size_t tiles) {
  int n = 0;
  for (std::size_t t = 0; t < tiles; ++t) n += b.knows(t);
  return n;
}

}  // namespace

TEST_CASE("effective speed: table lookup, zero while stuck") {
  MapSpec s = fixtures::open_map(4, 4, 2, 1);
  fixtures::add_type(s, {1, {1, 1, 1}, true, false, true, false, false, 0.0f, 0.0f});
  s.tile_types.push_back({2, {2, 2, 2}, false, false, true, false, false, 0.0f, 0.0f});
  s.speeds = {1.0f, 1.0f, 0.0f, 1.0f, 1.0f, 0.7f};
  s.agents[1].capabilities = agent_bits::kWalk | agent_bits::kSwim;
  s.type_grid[1] = 2;  // agent 1 spawns on (1,0)
  Harness h(s);
  CHECK(effective_speed(h.env(), 1) == 0.7f);
  CHECK(effective_speed(h.env(), 0) == 1.0f);
  h.env().agents()[0].flags |= agent_bits::kStuck;
  CHECK(effective_speed(h.env(), 0) == 0.0f);
}

TEST_CASE("heterogeneous speeds on water") {
  MapSpec s = fixtures::open_map(6, 1, 2, 1);
  fixtures::add_type(s, {1, {0, 0, 255}, false, false, true, false, false, 0.0f, 0.0f});
  for (int x = 0; x < 6; ++x) s.type_grid[x] = 1;
  s.agents[0].capabilities = agent_bits::kSwim;
  s.agents[1].capabilities = agent_bits::kSwim;
  s.agents[1].spawn = std::make_pair(0, 0);
  s.speeds = {1.0f, 0.3f, 1.0f, 0.0f};
  s.pois[0].spawn = std::make_pair(5, 0);
  Harness h(s);
  std::vector<AgentAction> a = {{1.0f, 0.0f, 0}, {1.0f, 0.0f, 1}};
  h.step(a);
  CHECK(h.env().agents()[0].x == 0.5f + 0.3f);
  CHECK(h.env().agents()[1].x == 0.5f);
}

TEST_CASE("apply_move on an open map") {
  Harness h(fixtures::open_map(5, 5));
  AgentState& a = h.env().agents()[0];
  a.x = 2.0f;
  a.y = 2.0f;
  apply_move(h.env(), 0, 1.0f, 0.0f);
  CHECK(a.x == 3.0f);
  CHECK(a.y == 2.0f);
  CHECK(a.last_x == 2);
  CHECK(a.last_y == 2);
}

TEST_CASE("apply_move resolves axes separately against walls") {
  MapSpec s = fixtures::open_map(5, 5);
  fixtures::add_type(s, {1, {0, 0, 0}, false, false, false, true, false, 9.0f, 0.0f});
  s.type_grid[2 * 5 + 3] = 1;  // wall at (3,2)
  Harness h(s);
  AgentState& a = h.env().agents()[0];
  a.x = 2.0f;
  a.y = 2.0f;
  apply_move(h.env(), 0, 1.0f, 0.0f);
  CHECK(a.x == 2.0f);
  apply_move(h.env(), 0, 1.0f, 1.0f);
  CHECK(a.x == 2.0f);
  CHECK(a.y == 3.0f);
  // out of bounds
  a.x = 0.5f;
  a.y = 0.5f;
  apply_move(h.env(), 0, -1.0f, -1.0f);
  CHECK(a.x == 0.5f);
  CHECK(a.y == 0.5f);
}

TEST_CASE("apply_move against a brute-force axis resolver") {
  const MapSpec s = fixtures::oracle_map(8);
  Harness h(s);
  RngStream r = RngStream::for_env(8, 8);
  for (int i = 0; i < 20000; ++i) {
    const int agent = static_cast<int>(r.below(3));
    AgentState& a = h.env().agents()[agent];
    // pick a standable start
    for (;;) {
      a.x = r.uniform01() * 16.0f;
      a.y = r.uniform01() * 16.0f;
      const Tile& t = h.env().tile(int(a.x), int(a.y));
      if (agent_can_enter(a.flags, a.max_alt(), t.flags, t.altitude)) break;
    }
    a.flags &= static_cast<std::uint8_t>(~agent_bits::kStuck);
    const float ax = r.uniform_pm1(), ay = r.uniform_pm1();
    const float x0 = a.x, y0 = a.y;
    const float sp = h.env().speed(agent, h.env().tile(int(x0), int(y0)).type_id());
    auto ok = [&](float x, float y) {
      if (x < 0 || y < 0 || x >= 16 || y >= 16) return false;
      const TileTypeDef& t = s.type(s.type_at(int(x), int(y)));
      return agent_can_enter(s.agents[agent].capabilities, a.max_alt(), t);
    };
    float ex = x0, ey = y0;
    if (ok(x0 + ax * sp, y0)) ex = x0 + ax * sp;
    if (ok(ex, y0 + ay * sp)) ey = y0 + ay * sp;
    apply_move(h.env(), agent, ax, ay);
    REQUIRE(a.x == ex);
    REQUIRE(a.y == ey);
  }
}

TEST_CASE("flyer cannot cross terrain above max_alt") {
  MapSpec s = fixtures::open_map(5, 1);
  fixtures::add_type(s, {1, {9, 9, 9}, false, true, false, false, false, 9.0f, 0.0f});
  s.type_grid[1] = 1;
  s.agents[0].capabilities = agent_bits::kFly;
  s.agents[0].max_alt = 5.0f;
  Harness h(s);
  apply_move(h.env(), 0, 1.0f, 0.0f);
  CHECK(h.env().agents()[0].x == 0.5f);
  h.env().agents()[0].set_max_alt(10.0f);
  apply_move(h.env(), 0, 1.0f, 0.0f);
  CHECK(h.env().agents()[0].x == 1.5f);
}

TEST_CASE("NaN and out-of-range actions are sanitised") {
  CHECK(clamp_axis(std::nanf("")) == 0.0f);
  CHECK(clamp_axis(3.0f) == 1.0f);
  CHECK(clamp_axis(-7.0f) == -1.0f);
  Harness h(fixtures::open_map(5, 5));
  h.step({{std::nanf(""), 5.0f, 0}});
  CHECK(h.env().agents()[0].x == 0.5f);
  CHECK(h.env().agents()[0].y == 1.5f);
}

namespace {
MapSpec sticky(float p) {
  MapSpec s = fixtures::open_map(3, 1);
  s.tile_types[0].stuck_probability = p;
  return s;
}
double stuck_rate(float p, int trials) {
  Harness h(sticky(p));
  int stuck = 0;
  for (int i = 0; i < trials; ++i) {
    AgentState& a = h.env().agents()[0];
    a.flags &= static_cast<std::uint8_t>(~agent_bits::kStuck);
    stuck_and_rescue(h.env(), h.rules(), 1u, h.rng);
    stuck += a.stuck();
  }
  return static_cast<double>(stuck) / trials;
}
}  // namespace

TEST_CASE("stuck probability extremes and frequency") {
  CHECK(stuck_rate(0.0f, 100000) == 0.0);
  CHECK(stuck_rate(1.0f, 1000) == 1.0);
  CHECK(std::abs(stuck_rate(0.25f, 100000) - 0.25) <= 0.005);

  Harness h(sticky(0.0f));
  for (int i = 0; i < 100000; ++i) {
    h.step({{h.rng.uniform_pm1(), 0.0f, 0}});
    REQUIRE_FALSE(h.env().agents()[0].stuck());
  }
}

TEST_CASE("stuck on first entry, then no movement") {
  Harness h(sticky(1.0f));
  h.step({{1.0f, 0.0f, 0}});
  CHECK(h.env().agents()[0].stuck());
  CHECK(h.env().agents()[0].x == 1.5f);
  h.step({{1.0f, 0.0f, 0}});
  CHECK(h.env().agents()[0].x == 1.5f);
}

TEST_CASE("rescue needs a free teammate within range") {
  MapSpec s = fixtures::open_map(6, 1, 2, 1);
  s.agents[1].spawn = std::make_pair(3, 0);
  Harness h(s);
  auto agents = h.env().agents();
  agents[0].flags |= agent_bits::kStuck;
  stuck_and_rescue(h.env(), h.rules(), 0u, h.rng);
  CHECK(agents[0].stuck());  // teammate 3 tiles away
  agents[1].x = 1.5f;
  stuck_and_rescue(h.env(), h.rules(), 0u, h.rng);
  CHECK_FALSE(agents[0].stuck());
  // a stuck teammate cannot help
  agents[0].flags |= agent_bits::kStuck;
  agents[1].flags |= agent_bits::kStuck;
  stuck_and_rescue(h.env(), h.rules(), 0u, h.rng);
  CHECK(agents[0].stuck());
  CHECK(agents[1].stuck());
}

TEST_CASE("visibility on a flat map is the Euclidean disc") {
  MapSpec s = fixtures::open_map(7, 7);
  s.agents[0].spawn = std::make_pair(2, 2);
  s.agents[0].view_range = 2.0f;
  Harness h(s);
  const auto vis = compute_visibility(h.env(), h.rules(), 0, h.scratch);
  std::set<int> got(vis.begin(), vis.end());
  std::set<int> want;
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 7; ++x) {
      if ((x - 2) * (x - 2) + (y - 2) * (y - 2) <= 4) want.insert(y * 7 + x);
    }
  }
  CHECK(got == want);
  CHECK(got.count(2 * 7 + 2) == 1);
}

TEST_CASE("own tile is always visible") {
  const MapSpec s = fixtures::oracle_map(4);
  Harness h(s);
  RngStream r = RngStream::for_env(4, 4);
  for (int i = 0; i < 2000; ++i) {
    const int a = static_cast<int>(r.below(3));
    AgentState& st = h.env().agents()[a];
    st.x = r.uniform01() * 16.0f;
    st.y = r.uniform01() * 16.0f;
    st.view_range = 0.1f;
    const auto vis = compute_visibility(h.env(), h.rules(), a, h.scratch);
    REQUIRE(std::find(vis.begin(), vis.end(), int(st.y) * 16 + int(st.x)) != vis.end());
  }
}

TEST_CASE("walls occlude along every ray") {
  MapSpec s = fixtures::open_map(9, 9);
  fixtures::add_type(s, {1, {0, 0, 0}, false, false, false, false, false, 9.0f, 0.0f});
  for (int y = 0; y < 9; ++y) s.type_grid[y * 9 + 5] = 1;  // tall column at x=5
  s.agents[0].spawn = std::make_pair(2, 4);
  s.agents[0].view_range = 8.0f;
  Harness h(s);
  for (int y = 0; y < 9; ++y) {
    for (int x = 6; x < 9; ++x) CHECK_FALSE(tile_visible(h.env(), h.rules(), 0, x, y));
    CHECK(tile_visible(h.env(), h.rules(), 0, 5, 4));  // the wall face itself
  }
  // Every other tile agrees with an explicit ray walk.
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) {
      const auto line = ref::grid_line(2, 4, x, y);
      bool clear = (x - 2) * (x - 2) + (y - 4) * (y - 4) <= 64;
      for (std::size_t i = 1; i + 1 < line.size(); ++i) {
        if (line[i].first == 5) clear = false;
      }
      CHECK(tile_visible(h.env(), h.rules(), 0, x, y) == clear);
    }
  }
}

TEST_CASE("visibility matches the brute-force reference on mixed terrain") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MapSpec s = fixtures::oracle_map(seed);
    Harness h(s, KnowledgeMode::PerAgentBeliefs, seed);
    ref::World w(s, KnowledgeMode::PerAgentBeliefs);
    RngStream r = RngStream::for_env(seed, 1);
    w.reset(r);
    RngStream p = RngStream::for_env(seed, 2);
    for (int i = 0; i < 200; ++i) {
      const int a = static_cast<int>(p.below(3));
      const float x = p.uniform01() * 16.0f, y = p.uniform01() * 16.0f;
      h.env().agents()[a].x = x;
      h.env().agents()[a].y = y;
      w.agents[a].x = x;
      w.agents[a].y = y;
      const auto vis = compute_visibility(h.env(), h.rules(), a, h.scratch);
      std::set<int> got(vis.begin(), vis.end());
      for (int t = 0; t < 256; ++t) REQUIRE((got.count(t) == 1) == w.sees(a, t % 16, t / 16));
    }
  }
}

TEST_CASE("view radius grows with altitude") {
  MapSpec s = fixtures::open_map(20, 1);
  s.tile_types[0].altitude = 10.0f;
  s.agents[0].view_range = 2.0f;
  Harness h(s);
  CHECK(view_radius(h.env(), h.rules(), 0) == 4.0f);
  CHECK(tile_visible(h.env(), h.rules(), 0, 4, 0));
  CHECK_FALSE(tile_visible(h.env(), h.rules(), 0, 5, 0));
}

TEST_CASE("radio to self changes nothing") {
  Harness h(corridor(12, 2, 2.0f));
  h.step(idle(2));
  std::vector<std::byte> before(h.env().bytes().begin(), h.env().bytes().end());
  const auto vis = compute_visibility(h.env(), h.rules(), 0, h.scratch);
  std::vector<std::byte> after_vis(h.env().bytes().begin(), h.env().bytes().end());
  radio_broadcast(h.env(), 0, 0, vis);
  CHECK(std::memcmp(after_vis.data(), h.env().base(), after_vis.size()) == 0);
  CHECK(before == after_vis);
}

TEST_CASE("radio target learns at least the sender's view") {
  MapSpec s = corridor(30, 2, 6.0f);
  s.agents[1].spawn = std::make_pair(25, 0);
  s.agents[1].view_range = 1.0f;
  Harness h(s);
  h.step(idle(2));
  const auto vis = compute_visibility(h.env(), h.rules(), 0, h.scratch);
  CHECK(vis.size() == 7);
  const BeliefView target = h.env().belief(1);
  radio_broadcast(h.env(), 0, 1, vis);
  CHECK(popcount_knowledge(target, 30) >= 7);
  for (auto t : vis) CHECK(target.knows(t));
}

TEST_CASE("chained relay passes only the relay's current view") {
  MapSpec s = fixtures::open_map(30, 1, 3, 1);
  for (int a = 0; a < 3; ++a) {
    s.agents[a].spawn = std::make_pair(10 * a, 0);
    s.agents[a].view_range = 2.0f;
  }
  s.pois[0].spawn = std::make_pair(1, 0);
  Harness h(s);
  auto step1 = idle(3);
  step1[0].radio_target = 1;
  h.step(step1);
  auto step2 = idle(3);
  step2[1].radio_target = 2;
  h.step(step2);

  const BeliefView b = h.env().belief(1), c = h.env().belief(2);
  std::set<int> b_known, c_known;
  for (int t = 0; t < 30; ++t) {
    if (b.knows(t)) b_known.insert(t);
    if (c.knows(t)) c_known.insert(t);
  }
  CHECK(b_known == std::set<int>{0, 1, 2, 8, 9, 10, 11, 12});
  CHECK(c_known == std::set<int>{8, 9, 10, 11, 12, 18, 19, 20, 21, 22});
  CHECK(c.pois[0] == KnownEntity{1, 0, 1});
  CHECK(c.agents[0] == KnownEntity{0, 0, 1});
  CHECK(c.agents[1] == KnownEntity{10, 0, 2});
}

TEST_CASE("shared knowledge makes radio a no-op") {
  MapSpec s = corridor(20, 2, 2.0f);
  s.agents[1].spawn = std::make_pair(10, 0);
  Harness h(s, KnowledgeMode::SharedBeliefs);
  h.step(idle(2));
  const auto vis = compute_visibility(h.env(), h.rules(), 0, h.scratch);
  std::vector<std::byte> before(h.env().bytes().begin(), h.env().bytes().end());
  radio_broadcast(h.env(), 0, 1, vis);
  CHECK(std::memcmp(before.data(), h.env().base(), before.size()) == 0);
}

TEST_CASE("POI found at the step its tile enters line of sight") {
  MapSpec s = corridor(20, 1, 2.0f);
  s.pois[0].spawn = std::make_pair(10, 0);
  Harness h(s);
  for (int step = 1; step <= 12; ++step) {
    const StepResult r = h.step({{1.0f, 0.0f, 0}});
    const bool found = h.env().pois()[0].found();
    // agent on tile `step` sees up to tile step + 2
    CHECK(found == (step >= 8));
    CHECK(r.newly_found == (step == 8 ? 1 : 0));
  }
  CHECK(h.env().counters()[kPoisFound] == 1);
}

TEST_CASE("POI not savable by an agent outside its mask") {
  MapSpec s = fixtures::open_map(5, 1, 2, 1);
  s.agents[1].spawn = std::make_pair(4, 0);
  s.pois[0].spawn = std::make_pair(4, 0);
  s.pois[0].savable_by = 0b01;
  Harness h(s);
  const StepResult r = h.step(idle(2));
  CHECK(h.env().pois()[0].found());
  CHECK_FALSE(h.env().pois()[0].saved());
  CHECK(r.newly_saved == 0);
  CHECK_FALSE(r.terminated);
}

TEST_CASE("reward composition") {
  MapSpec s = corridor(20, 1, 6.0f);
  s.pois[0].spawn = std::make_pair(5, 0);
  Harness h(s);
  const StepResult r = h.step(idle(1));
  CHECK(r.newly_observed == 7);
  CHECK(r.newly_found == 1);
  CHECK(r.reward == 0.01f * 7.0f + 1.0f * 1.0f + 10.0f * 0.0f);

  const StepResult r2 = h.step(idle(1));
  CHECK(r2.reward == 0.0f);
  CHECK_FALSE(r2.terminated);
  CHECK_FALSE(r2.truncated);
}

TEST_CASE("saving the last POI terminates without truncation") {
  MapSpec s = fixtures::open_map(3, 1);
  s.pois[0].spawn = std::make_pair(0, 0);
  s.horizon = 1;
  Harness h(s);
  const StepResult r = h.step(idle(1));
  CHECK(r.terminated);
  CHECK_FALSE(r.truncated);
  CHECK(r.newly_saved == 1);
}

TEST_CASE("horizon truncates") {
  MapSpec s = fixtures::open_map(8, 1);
  s.horizon = 3;
  Harness h(s);
  CHECK_FALSE(h.step(idle(1)).truncated);
  CHECK_FALSE(h.step(idle(1)).truncated);
  CHECK(h.step(idle(1)).truncated);
}

TEST_CASE("deployment delays movement and sight") {
  MapSpec s = corridor(20, 1, 2.0f);
  s.agents[0].deployment = 2.0f;
  Harness h(s);
  StepResult r = h.step({{1.0f, 0.0f, 0}});
  CHECK(h.env().agents()[0].x == 0.5f);
  CHECK(r.newly_observed == 0);
  r = h.step({{1.0f, 0.0f, 0}});
  CHECK(h.env().agents()[0].x == 1.5f);
  CHECK(r.newly_observed > 0);
}

TEST_CASE("contract errors") {
  Harness h(fixtures::open_map(4, 4, 2, 1));
  CHECK_THROWS_AS(h.step(idle(1)), ContractError);
  CHECK_THROWS_AS(h.step({{0, 0, 0}, {0, 0, 2}}), ContractError);
}

TEST_CASE("per-agent rewards credit the first observer") {
  MapSpec s = corridor(20, 2, 2.0f);
  s.agents[1].spawn = std::make_pair(2, 0);
  s.pois[0].spawn = std::make_pair(19, 0);
  Harness h(s);
  const StepResult r = h.step(idle(2));
  // agent 0 sees 0..2, agent 1 sees 0..4 of which 3..4 are new
  CHECK(r.newly_observed == 5);
  CHECK(r.agent_rewards[0] == 0.01f * 3.0f);
  CHECK(r.agent_rewards[1] == 0.01f * 2.0f);
}

TEST_CASE("step invariants over random play") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const MapSpec s = fixtures::oracle_map(seed);
    Harness h(s, KnowledgeMode::PerAgentBeliefs, seed);
    RngStream act = RngStream::for_env(seed, 77);
    std::vector<AgentAction> actions(3);
    std::vector<std::uint32_t> prev(256);
    double episode = 0.0;
    const double bound = 256 * 0.01 + 2 * (1.0 + 10.0);
    for (int i = 0; i < 3000; ++i) {
      for (int t = 0; t < 256; ++t) prev[t] = h.env().grid()[t].flags;
      random_agent_actions(act, actions);
      const StepResult r = h.step(actions);
      REQUIRE(r.reward >= 0.0f);
      REQUIRE_FALSE((r.terminated && r.truncated));
      episode += r.reward;
      REQUIRE(episode <= bound + 1e-4);
      for (const auto& p : h.env().pois()) REQUIRE((!p.saved() || p.found()));
      for (const auto& a : h.env().agents()) {
        REQUIRE(a.x >= 0.0f);
        REQUIRE(a.x < 16.0f);
        REQUIRE(a.y >= 0.0f);
        REQUIRE(a.y < 16.0f);
        REQUIRE(a.pad == 0);
      }
      // radio superset: each target knows every tile its sender saw this step
      for (int a = 0; a < 3; ++a) {
        if (!h.env().agents()[a].deployed()) continue;
        const BeliefView tgt = h.env().belief(actions[a].radio_target);
        for (auto t : h.scratch.visible(a)) REQUIRE(tgt.knows(t));
      }
      if (r.terminated || r.truncated) {
        h.arena.reset_env(0, h.rng);
        episode = 0.0;
        continue;
      }
      for (int t = 0; t < 256; ++t) {
        const std::uint32_t now = h.env().grid()[t].flags;
        REQUIRE((prev[t] & ~now) == 0);  // no bit goes 1 -> 0
        REQUIRE((now & (0xFFFFFu << (12 + 3))) == 0);
      }
    }
  }
}

TEST_CASE("engine matches the reference world step for step") {
  for (auto mode : {KnowledgeMode::None, KnowledgeMode::PerAgentBeliefs, KnowledgeMode::SharedBeliefs}) {
    for (std::uint64_t seed = 10; seed < 13; ++seed) {
      const MapSpec s = fixtures::oracle_map(seed);
      Harness h(s, mode, seed);
      ref::World w(s, mode);
      RngStream wr = RngStream::for_env(seed, 0);
      w.reset(wr);
      REQUIRE(w.diff(h.env()) == "");
      RngStream act = RngStream::for_env(seed, 5);
      std::vector<AgentAction> actions(3);
      for (int i = 0; i < 2000; ++i) {
        random_agent_actions(act, actions);
        const StepResult a = h.step(actions);
        const ref::Result b = w.step(actions, wr);
        REQUIRE(std::bit_cast<std::uint32_t>(a.reward) == std::bit_cast<std::uint32_t>(b.reward));
        for (int k = 0; k < 3; ++k) REQUIRE(a.agent_rewards[k] == b.agent_rewards[k]);
        REQUIRE(a.terminated == b.terminated);
        REQUIRE(a.truncated == b.truncated);
        const std::string d = w.diff(h.env());
        INFO("step " << i << "\n" << d);
        REQUIRE(d.empty());
        REQUIRE(h.rng == wr);
        if (a.terminated || a.truncated) {
          h.arena.reset_env(0, h.rng);
          w.reset(wr);
        }
      }
    }
  }
}
