#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "hideseek/errors.hpp"
#include "hideseek/layout.hpp"
#include "hideseek/rng.hpp"

using namespace hideseek;

TEST_CASE("pack_tile_flags bit positions") {
  TileFlags f;
  f.walkable = true;
  f.type_id = 3;
  CHECK(pack_tile_flags(f) == 0x00000061u);

  TileFlags g;
  g.visibility_mask = 1u << 5;
  CHECK(pack_tile_flags(g) == 0x00020000u);

  TileFlags all{true, true, true, true, true, 127, 0xFFFFFu};
  CHECK(pack_tile_flags(all) == 0xFFFFFFFFu);
}

TEST_CASE("unpack_tile_flags examples") {
  const TileFlags a = unpack_tile_flags(0x61);
  CHECK(a.walkable);
  CHECK_FALSE(a.flyable);
  CHECK(a.type_id == 3);
  CHECK(a.visibility_mask == 0);

  const TileFlags b = unpack_tile_flags(0x00020000u);
  CHECK(b.visibility_mask == (1u << 5));
  CHECK(b.type_id == 0);
  CHECK_FALSE(b.walkable);

  CHECK(unpack_tile_flags(0) == TileFlags{});
}

TEST_CASE("pack_tile_flags rejects out-of-range fields") {
  TileFlags f;
  f.type_id = 128;
  CHECK_THROWS_AS(pack_tile_flags(f), ValidationError);
  f.type_id = 0;
  f.visibility_mask = 1u << 20;
  CHECK_THROWS_AS(pack_tile_flags(f), ValidationError);
}

TEST_CASE("pack/unpack round trip over random words") {
  RngStream rng = RngStream::for_env(11, 0);
  for (int i = 0; i < 100000; ++i) {
    const auto w = static_cast<std::uint32_t>(rng.next_u64());
    CHECK_EQ(pack_tile_flags(unpack_tile_flags(w)), w);
    TileFlags f;
    f.walkable = rng.below(2);
    f.flyable = rng.below(2);
    f.aquatic = rng.below(2);
    f.blocking = rng.below(2);
    f.global_observed = rng.below(2);
    f.type_id = static_cast<std::uint8_t>(rng.below(128));
    f.visibility_mask = rng.below(1u << 20);
    REQUIRE(unpack_tile_flags(pack_tile_flags(f)) == f);
  }
}

TEST_CASE("struct sizes") {
  CHECK(sizeof(Tile) == 8);
  CHECK(alignof(Tile) == 8);
  CHECK(sizeof(AgentState) == 24);
  CHECK(sizeof(POIState) == 16);
  AgentState s;
  CHECK(s.pad == 0);
}

TEST_CASE("AgentState field offsets") {
  CHECK(offsetof(AgentState, x) == 0);
  CHECK(offsetof(AgentState, y) == 4);
  CHECK(offsetof(AgentState, view_range) == 8);
  CHECK(offsetof(AgentState, deployment_remaining) == 12);
  CHECK(offsetof(AgentState, last_x) == 16);
  CHECK(offsetof(AgentState, last_y) == 18);
  CHECK(offsetof(AgentState, flags) == 20);
  CHECK(offsetof(AgentState, max_alt_bits) == 21);
  CHECK(offsetof(AgentState, pad) == 23);
  CHECK(offsetof(POIState, state_flags) == 8);
  CHECK(offsetof(POIState, last_y) == 14);
}

// Independent binary16 decoder.
static double decode_half(std::uint16_t h) {
  const int sign = h >> 15;
  const int exp = (h >> 10) & 0x1F;
  const int mant = h & 0x3FF;
  double v;
  if (exp == 0) {
    v = std::ldexp(mant, -24);
  } else if (exp == 31) {
    v = mant ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  } else {
    v = std::ldexp(1024 + mant, exp - 25);
  }
  return sign ? -v : v;
}

TEST_CASE("half_to_float matches the reference decoder for every code") {
  for (std::uint32_t h = 0; h <= 0xFFFF; ++h) {
    const double want = decode_half(static_cast<std::uint16_t>(h));
    const float got = half_to_float(static_cast<std::uint16_t>(h));
    if (std::isnan(want)) {
      REQUIRE(std::isnan(got));
    } else {
      REQUIRE(static_cast<double>(got) == want);
    }
  }
}

TEST_CASE("float_to_half rounds to nearest, ties to even") {
  for (std::uint32_t h = 0; h < 0x7C00; ++h) {
    const float f = half_to_float(static_cast<std::uint16_t>(h));
    REQUIRE(float_to_half(f) == h);
    REQUIRE(float_to_half(-f) == (h | 0x8000u));
  }
  // Midpoints between consecutive finite codes.
  for (std::uint32_t h = 0; h + 1 < 0x7C00; ++h) {
    const double lo = decode_half(static_cast<std::uint16_t>(h));
    const double hi = decode_half(static_cast<std::uint16_t>(h + 1));
    const float mid = static_cast<float>((lo + hi) / 2);
    if (static_cast<double>(mid) != (lo + hi) / 2) continue;
    const std::uint16_t even = (h % 2 == 0) ? h : h + 1;
    REQUIRE(float_to_half(mid) == even);
  }
  CHECK(float_to_half(1e6f) == 0x7C00);
  CHECK(float_to_half(std::numeric_limits<float>::infinity()) == 0x7C00);
  CHECK((float_to_half(std::numeric_limits<float>::quiet_NaN()) & 0x7FFF) > 0x7C00);
  CHECK(float_to_half(65504.0f) == 0x7BFF);
  CHECK(float_to_half(65520.0f) == 0x7C00);
}

TEST_CASE("compute_layout: 4x4, 2 agents, 1 POI, 3 types, no knowledge") {
  const ArenaLayout l = compute_layout({4, 4, 2, 1, 3}, KnowledgeMode::None);
  CHECK(l.offset_grid == 0);
  CHECK(l.grid_bytes() == 128);
  CHECK(l.offset_agents == 128);
  CHECK(l.agents_bytes() == 48);
  CHECK(l.offset_pois == 176);
  CHECK(l.pois_bytes() == 16);
  CHECK(l.offset_speeds == 192);
  CHECK(l.speeds_bytes() == 24);
  CHECK(l.offset_counters == 216);
  CHECK(l.raw_stride == 232);
  CHECK(l.env_stride == 256);
}

TEST_CASE("compute_layout: 64x64, 10 agents, per-agent bitsets") {
  const ArenaLayout l = compute_layout({64, 64, 10, 5, 8}, KnowledgeMode::PerAgentTiles);
  CHECK(l.knowledge_bytes() == 10 * 512);
  CHECK(l.raw_stride == 32768 + 240 + 80 + 320 + 5120 + 16);
  CHECK(l.raw_stride == 38544);
  CHECK(l.env_stride == 38656);
}

TEST_CASE("pad_stride boundaries") {
  CHECK(pad_stride(256) == 256);
  CHECK(pad_stride(257) == 512);
  CHECK(pad_stride(1) == 256);
  CHECK(pad_stride(13, 8) == 16);
}

TEST_CASE("compute_layout errors") {
  CHECK_THROWS_AS(compute_layout({4, 4, 21, 1, 1}, KnowledgeMode::None), CapacityError);
  CHECK_THROWS_AS(compute_layout({4, 4, 1, 1, 129}, KnowledgeMode::None), CapacityError);
  CHECK_THROWS_AS(compute_layout({0, 4, 1, 1, 1}, KnowledgeMode::None), ValidationError);
  CHECK_THROWS_AS(compute_layout({4, 4, 1, 0, 1}, KnowledgeMode::None), ValidationError);
}

static std::size_t expected_knowledge(const ArenaCounts& c, KnowledgeMode m) {
  const std::size_t bits = (static_cast<std::size_t>(c.width) * c.height + 7) / 8;
  auto r8 = [](std::size_t v) { return (v + 7) / 8 * 8; };
  switch (m) {
    case KnowledgeMode::None: return 0;
    case KnowledgeMode::PerAgentTiles: return r8(c.n_agents * bits);
    case KnowledgeMode::SharedTiles: return r8(bits);
    case KnowledgeMode::PerAgentBeliefs: return c.n_agents * (r8(bits) + 8 * (c.n_pois + c.n_agents));
    case KnowledgeMode::SharedBeliefs: return r8(bits) + 8 * (c.n_pois + c.n_agents);
  }
  return 0;
}

TEST_CASE("compute_layout property over random configurations") {
  RngStream rng = RngStream::for_env(3, 1);
  const KnowledgeMode modes[] = {KnowledgeMode::None, KnowledgeMode::PerAgentTiles,
                                 KnowledgeMode::SharedTiles, KnowledgeMode::PerAgentBeliefs,
                                 KnowledgeMode::SharedBeliefs};
  for (int i = 0; i < 1000; ++i) {
    ArenaCounts c;
    c.width = 1 + static_cast<int>(rng.below(128));
    c.height = 1 + static_cast<int>(rng.below(128));
    c.n_agents = 1 + static_cast<int>(rng.below(20));
    c.n_pois = 1 + static_cast<int>(rng.below(16));
    c.n_types = 1 + static_cast<int>(rng.below(128));
    const KnowledgeMode m = modes[rng.below(5)];
    const ArenaLayout l = compute_layout(c, m);
    const std::size_t grid = static_cast<std::size_t>(c.width) * c.height * 8;
    REQUIRE(l.offset_grid == 0);
    REQUIRE(l.offset_agents == grid);
    REQUIRE(l.offset_pois == l.offset_agents + 24 * c.n_agents);
    REQUIRE(l.offset_speeds == l.offset_pois + 16 * c.n_pois);
    REQUIRE(l.offset_knowledge == l.offset_speeds + 4 * c.n_agents * c.n_types);
    REQUIRE(l.offset_counters == l.offset_knowledge + expected_knowledge(c, m));
    REQUIRE(l.raw_stride == l.offset_counters + 16);
    REQUIRE(l.env_stride == ((l.raw_stride + 255) & ~std::size_t{255}));
    REQUIRE(l.env_stride % 256 == 0);
    REQUIRE(l.env_stride >= l.raw_stride);
    REQUIRE(l.env_stride - l.raw_stride < 256);
    // 4-byte alignment is all the records and counters need.
    REQUIRE(l.offset_knowledge % 4 == 0);
    REQUIRE(l.offset_counters % 4 == 0);
  }
}

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a = RngStream::for_env(1, 0), b = RngStream::for_env(1, 0), c = RngStream::for_env(1, 1);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  RngStream r = RngStream::for_env(5, 5);
  int counts[7] = {};
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  for (int k : counts) CHECK(std::abs(k - 10000) < 500);
  for (int i = 0; i < 10000; ++i) {
    const float u = r.uniform01();
    REQUIRE(u >= 0.0f);
    REQUIRE(u < 1.0f);
    const float v = r.uniform_pm1();
    REQUIRE(v >= -1.0f);
    REQUIRE(v < 1.0f);
  }
}
