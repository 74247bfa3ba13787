#pragma once

// Packed entity records and the byte layout of one environment inside the arena.
//
// Every environment occupies one stride of the arena slab:
//
//   grid      W*H Tiles              8 B each
//   agents    n_agents AgentStates  24 B each
//   pois      n_pois POIStates      16 B each
//   speeds    n_agents*n_types floats
//   knowledge mode dependent (see KnowledgeMode)
//   counters  int32[4]
//   padding   up to the next kStrideAlignment boundary

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>

namespace hideseek {

inline constexpr int kMaxAgents = 20;
inline constexpr int kMaxTileTypes = 128;
inline constexpr std::size_t kStrideAlignment = 256;
inline constexpr std::size_t kCacheLine = 64;

// IEEE binary16 conversion, round-to-nearest-even.
std::uint16_t float_to_half(float value);
float half_to_float(std::uint16_t bits);

// ---------------------------------------------------------------------------
// Tile

namespace tile_bits {
inline constexpr std::uint32_t kWalkable = 1u << 0;
inline constexpr std::uint32_t kFlyable = 1u << 1;
inline constexpr std::uint32_t kAquatic = 1u << 2;
inline constexpr std::uint32_t kBlocking = 1u << 3;
inline constexpr std::uint32_t kGlobalObserved = 1u << 4;
inline constexpr int kTypeShift = 5;
inline constexpr std::uint32_t kTypeMask = 0x7Fu << kTypeShift;
inline constexpr int kVisibilityShift = 12;
inline constexpr std::uint32_t kVisibilityMask = 0xFFFFFu << kVisibilityShift;
}  // namespace tile_bits

struct TileFlags {
  bool walkable = false;
  bool flyable = false;
  bool aquatic = false;
  bool blocking = false;
  bool global_observed = false;
  std::uint8_t type_id = 0;
  std::uint32_t visibility_mask = 0;

  friend bool operator==(const TileFlags&, const TileFlags&) = default;
};

// Throws ValidationError if type_id >= 128 or visibility_mask >= 2^20.
std::uint32_t pack_tile_flags(const TileFlags& flags);
TileFlags unpack_tile_flags(std::uint32_t word);

struct alignas(8) Tile {
  std::uint32_t flags = 0;
  float altitude = 0.0f;

  std::uint8_t type_id() const {
    return static_cast<std::uint8_t>((flags & tile_bits::kTypeMask) >> tile_bits::kTypeShift);
  }
  bool has(std::uint32_t bit) const { return (flags & bit) != 0; }
  bool visible_to(int agent) const {
    return (flags >> (tile_bits::kVisibilityShift + agent)) & 1u;
  }
};

// ---------------------------------------------------------------------------
// AgentState

namespace agent_bits {
inline constexpr std::uint8_t kStuck = 1u << 0;
inline constexpr std::uint8_t kWalk = 1u << 1;
inline constexpr std::uint8_t kFly = 1u << 2;
inline constexpr std::uint8_t kSwim = 1u << 3;
inline constexpr std::uint8_t kCapabilities = kWalk | kFly | kSwim;
}  // namespace agent_bits

struct AgentState {
  float x = 0.0f;
  float y = 0.0f;
  float view_range = 0.0f;
  float deployment_remaining = 0.0f;
  std::uint16_t last_x = 0;
  std::uint16_t last_y = 0;
  std::uint8_t flags = 0;
  // fp16, stored bytewise so the record packs to 24 bytes.
  std::array<std::uint8_t, 2> max_alt_bits{};
  std::uint8_t pad = 0;

  float max_alt() const {
    std::uint16_t bits;
    std::memcpy(&bits, max_alt_bits.data(), sizeof bits);
    return half_to_float(bits);
  }
  void set_max_alt(float value) {
    const std::uint16_t bits = float_to_half(value);
    std::memcpy(max_alt_bits.data(), &bits, sizeof bits);
  }
  bool stuck() const { return (flags & agent_bits::kStuck) != 0; }
  bool deployed() const { return deployment_remaining <= 0.0f; }
};

// ---------------------------------------------------------------------------
// POIState

namespace poi_bits {
inline constexpr std::uint32_t kSavableMask = 0xFFFFFu;
inline constexpr std::uint32_t kFound = 1u << 20;
inline constexpr std::uint32_t kSaved = 1u << 21;
inline constexpr std::uint32_t kMoves = 1u << 22;
inline constexpr std::uint32_t kReserved = ~0x7FFFFFu;
}  // namespace poi_bits

struct POIState {
  float x = 0.0f;
  float y = 0.0f;
  std::uint32_t state_flags = 0;
  std::uint16_t last_x = 0;
  std::uint16_t last_y = 0;

  std::uint32_t savable_by() const { return state_flags & poi_bits::kSavableMask; }
  bool found() const { return (state_flags & poi_bits::kFound) != 0; }
  bool saved() const { return (state_flags & poi_bits::kSaved) != 0; }
  bool moves() const { return (state_flags & poi_bits::kMoves) != 0; }
};

// A belief about where an entity (POI or agent) was last seen. stamp is the
// 1-based step of the observation; 0 means "never seen".
struct KnownEntity {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint32_t stamp = 0;

  friend bool operator==(const KnownEntity&, const KnownEntity&) = default;
};

static_assert(sizeof(Tile) == 8 && alignof(Tile) == 8);
static_assert(sizeof(AgentState) == 24);
static_assert(sizeof(POIState) == 16);
static_assert(sizeof(KnownEntity) == 8);

// ---------------------------------------------------------------------------
// Counters

enum Counter : int {
  kStepsElapsed = 0,
  kTilesDiscovered = 1,
  kPoisFound = 2,
  kPoisSaved = 3,
};
inline constexpr int kNumCounters = 4;

// ---------------------------------------------------------------------------
// Knowledge block

enum class KnowledgeMode {
  None,
  PerAgentTiles,    // one observed-tile bitset per agent
  SharedTiles,      // one bitset for the whole team
  PerAgentBeliefs,  // per agent: bitset + POI records + teammate records
  SharedBeliefs,    // a single fused belief block
};

bool knowledge_is_shared(KnowledgeMode mode);
bool knowledge_has_records(KnowledgeMode mode);

struct ArenaCounts {
  int width = 0;
  int height = 0;
  int n_agents = 0;
  int n_pois = 0;
  int n_types = 0;

  friend bool operator==(const ArenaCounts&, const ArenaCounts&) = default;
};

struct ArenaLayout {
  ArenaCounts counts;
  KnowledgeMode knowledge = KnowledgeMode::None;

  std::size_t offset_grid = 0;
  std::size_t offset_agents = 0;
  std::size_t offset_pois = 0;
  std::size_t offset_speeds = 0;
  std::size_t offset_knowledge = 0;
  std::size_t offset_counters = 0;
  std::size_t raw_stride = 0;
  std::size_t env_stride = 0;

  // Knowledge sub-layout.
  int belief_blocks = 0;                // 0, 1 or n_agents
  std::size_t bitset_bytes = 0;         // ceil(W*H/8)
  std::size_t belief_block_stride = 0;  // bytes between consecutive blocks
  std::size_t belief_records_offset = 0;  // records start inside a block (0 if none)

  std::size_t tiles() const {
    return static_cast<std::size_t>(counts.width) * static_cast<std::size_t>(counts.height);
  }
  std::size_t grid_bytes() const { return tiles() * sizeof(Tile); }
  std::size_t agents_bytes() const { return counts.n_agents * sizeof(AgentState); }
  std::size_t pois_bytes() const { return counts.n_pois * sizeof(POIState); }
  std::size_t speeds_bytes() const {
    return static_cast<std::size_t>(counts.n_agents) * counts.n_types * sizeof(float);
  }
  std::size_t knowledge_bytes() const { return offset_counters - offset_knowledge; }
  std::size_t counters_bytes() const { return kNumCounters * sizeof(std::int32_t); }
};

inline constexpr std::size_t round_up(std::size_t value, std::size_t multiple) {
  return (value + multiple - 1) / multiple * multiple;
}

// (raw + 255) & ~255 for the default alignment.
inline constexpr std::size_t pad_stride(std::size_t raw_stride,
                                        std::size_t alignment = kStrideAlignment) {
  return (raw_stride + alignment - 1) & ~(alignment - 1);
}

// Throws ValidationError for non-positive counts, CapacityError for > 20 agents
// or > 128 tile types. stride_alignment must be a power of two (pass 8 for the
// unpadded-stride ablation).
ArenaLayout compute_layout(const ArenaCounts& counts, KnowledgeMode knowledge,
                           std::size_t stride_alignment = kStrideAlignment);

}  // namespace hideseek
