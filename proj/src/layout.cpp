#include "hideseek/layout.hpp"

#include <bit>
#include <string>

#include "hideseek/errors.hpp"

namespace hideseek {

std::uint16_t float_to_half(float value) {
  const auto f = std::bit_cast<std::uint32_t>(value);
  const std::uint32_t sign = (f >> 16) & 0x8000u;
  const std::uint32_t abs = f & 0x7FFFFFFFu;

  if (abs >= 0x7F800000u) {  // inf or nan
    const std::uint32_t mant = abs > 0x7F800000u ? 0x200u : 0u;
    return static_cast<std::uint16_t>(sign | 0x7C00u | mant);
  }
  if (abs >= 0x477FF000u) {  // rounds to >= 65520 -> inf
    return static_cast<std::uint16_t>(sign | 0x7C00u);
  }
  if (abs < 0x38800000u) {  // subnormal half (or zero)
    if (abs < 0x33000000u) return static_cast<std::uint16_t>(sign);
    const std::uint32_t exp = abs >> 23;
    const std::uint32_t mant = (abs & 0x7FFFFFu) | 0x800000u;
    const std::uint32_t shift = 126 - exp;  // 14..24
    std::uint32_t half = mant >> shift;
    const std::uint32_t rem = mant & ((1u << shift) - 1);
    const std::uint32_t midpoint = 1u << (shift - 1);
    if (rem > midpoint || (rem == midpoint && (half & 1u))) ++half;
    return static_cast<std::uint16_t>(sign | half);
  }
  std::uint32_t half = ((abs - 0x38000000u) >> 13);
  const std::uint32_t rem = abs & 0x1FFFu;
  if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;
  return static_cast<std::uint16_t>(sign | half);
}

float half_to_float(std::uint16_t bits) {
  const std::uint32_t sign = static_cast<std::uint32_t>(bits & 0x8000u) << 16;
  const std::uint32_t exp = (bits >> 10) & 0x1Fu;
  std::uint32_t mant = bits & 0x3FFu;
  std::uint32_t out;
  if (exp == 0) {
    if (mant == 0) {
      out = sign;
    } else {
      int e = -1;
      do {
        ++e;
        mant <<= 1;
      } while ((mant & 0x400u) == 0);
      out = sign | ((112u - e) << 23) | ((mant & 0x3FFu) << 13);
    }
  } else if (exp == 0x1F) {
    out = sign | 0x7F800000u | (mant << 13);
  } else {
    out = sign | ((exp + 112u) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(out);
}

std::uint32_t pack_tile_flags(const TileFlags& f) {
  if (f.type_id >= kMaxTileTypes) {
    throw ValidationError("tile type_id " + std::to_string(f.type_id) + " exceeds 7 bits");
  }
  if (f.visibility_mask >= (1u << kMaxAgents)) {
    throw ValidationError("tile visibility mask exceeds 20 bits");
  }
  using namespace tile_bits;
  std::uint32_t word = 0;
  if (f.walkable) word |= kWalkable;
  if (f.flyable) word |= kFlyable;
  if (f.aquatic) word |= kAquatic;
  if (f.blocking) word |= kBlocking;
  if (f.global_observed) word |= kGlobalObserved;
  word |= static_cast<std::uint32_t>(f.type_id) << kTypeShift;
  word |= f.visibility_mask << kVisibilityShift;
  return word;
}

TileFlags unpack_tile_flags(std::uint32_t word) {
  using namespace tile_bits;
  TileFlags f;
  f.walkable = word & kWalkable;
  f.flyable = word & kFlyable;
  f.aquatic = word & kAquatic;
  f.blocking = word & kBlocking;
  f.global_observed = word & kGlobalObserved;
  f.type_id = static_cast<std::uint8_t>((word & kTypeMask) >> kTypeShift);
  f.visibility_mask = (word & kVisibilityMask) >> kVisibilityShift;
  return f;
}

bool knowledge_is_shared(KnowledgeMode mode) {
  return mode == KnowledgeMode::SharedTiles || mode == KnowledgeMode::SharedBeliefs;
}

bool knowledge_has_records(KnowledgeMode mode) {
  return mode == KnowledgeMode::PerAgentBeliefs || mode == KnowledgeMode::SharedBeliefs;
}

ArenaLayout compute_layout(const ArenaCounts& counts, KnowledgeMode knowledge,
                           std::size_t stride_alignment) {
  if (counts.width <= 0 || counts.height <= 0 || counts.n_agents <= 0 || counts.n_pois <= 0 ||
      counts.n_types <= 0) {
    throw ValidationError("arena counts must all be positive");
  }
  if (counts.n_agents > kMaxAgents) {
    throw CapacityError("n_agents " + std::to_string(counts.n_agents) +
                        " exceeds the 20-bit visibility mask");
  }
  if (counts.n_types > kMaxTileTypes) {
    throw CapacityError("n_types " + std::to_string(counts.n_types) + " exceeds 7-bit type id");
  }
  if (counts.width > 0xFFFF || counts.height > 0xFFFF) {
    throw CapacityError("map dimensions exceed 16-bit tile coordinates");
  }
  if (stride_alignment == 0 || (stride_alignment & (stride_alignment - 1)) != 0 ||
      stride_alignment < alignof(Tile)) {
    throw ValidationError("stride alignment must be a power of two >= 8");
  }

  ArenaLayout l;
  l.counts = counts;
  l.knowledge = knowledge;
  l.offset_grid = 0;
  l.offset_agents = l.offset_grid + l.grid_bytes();
  l.offset_pois = l.offset_agents + l.agents_bytes();
  l.offset_speeds = l.offset_pois + l.pois_bytes();
  l.offset_knowledge = l.offset_speeds + l.speeds_bytes();

  l.bitset_bytes = (l.tiles() + 7) / 8;
  std::size_t knowledge_bytes = 0;
  switch (knowledge) {
    case KnowledgeMode::None:
      l.belief_blocks = 0;
      break;
    case KnowledgeMode::PerAgentTiles:
    case KnowledgeMode::SharedTiles:
      l.belief_blocks = knowledge == KnowledgeMode::SharedTiles ? 1 : counts.n_agents;
      l.belief_block_stride = l.bitset_bytes;
      knowledge_bytes = round_up(l.belief_blocks * l.bitset_bytes, 8);
      break;
    case KnowledgeMode::PerAgentBeliefs:
    case KnowledgeMode::SharedBeliefs:
      l.belief_blocks = knowledge == KnowledgeMode::SharedBeliefs ? 1 : counts.n_agents;
      l.belief_records_offset = round_up(l.bitset_bytes, 8);
      l.belief_block_stride =
          l.belief_records_offset +
          sizeof(KnownEntity) * static_cast<std::size_t>(counts.n_pois + counts.n_agents);
      knowledge_bytes = l.belief_blocks * l.belief_block_stride;
      break;
  }
  l.offset_counters = l.offset_knowledge + knowledge_bytes;
  l.raw_stride = l.offset_counters + l.counters_bytes();
  l.env_stride = pad_stride(l.raw_stride, stride_alignment);
  return l;
}

}  // namespace hideseek
