#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ccsim/coding.hpp"

namespace ccsim::placement {

// Cache placement parameters. Each node's cache is a pure function of
// (seed, node_id, config): per-node streams are derived from the seed so
// nodes can be placed in any order, or lazily, with identical results.
struct PlacementConfig {
  coding::Scheme scheme = coding::Scheme::Coded;
  std::size_t content_count = 0;  // m
  std::size_t cache_slots = 0;    // M
  bool independence = false;      // coded: reject dependent slot vectors
  std::uint64_t seed = 0;

  // Whether the cache-size regime for last-hop secrecy holds (m < 2^M).
  bool secrecy_regime() const;
  void validate() const;  // throws ConfigError
};

// Slot encoding vectors for one node (coded scheme), without payloads.
std::vector<gf2::BitVector> draw_slot_vectors(const PlacementConfig& config,
                                              std::size_t node_id);
// Distinct slot content indices for one node (uncoded scheme), 1-based,
// uniform over the C(m, M) subsets.
std::vector<std::size_t> draw_slot_indices(const PlacementConfig& config,
                                           std::size_t node_id);

coding::NodeCache place_coded(const PlacementConfig& config,
                              const coding::ContentStore& store,
                              std::size_t node_id);
coding::NodeCache place_uncoded(const PlacementConfig& config,
                                const coding::ContentStore& store,
                                std::size_t node_id);
coding::NodeCache place_node(const PlacementConfig& config,
                             const coding::ContentStore& store,
                             std::size_t node_id);
std::vector<coding::NodeCache> place_all(const PlacementConfig& config,
                                         const coding::ContentStore& store,
                                         std::size_t node_count);

// Same slot vectors / indices as place_all for the same seed, but with
// payloads left empty. Enough for rank and coverage experiments that never
// read slot payloads.
std::vector<coding::NodeCache> place_all_light(const PlacementConfig& config,
                                               std::size_t node_count);

// CSV dump (node_id, slot, scheme, index, vector_hex, payload_fnv64) for
// experiment replay.
void write_cache_snapshot(std::ostream& out,
                          std::span<const coding::NodeCache> caches);

}  // namespace ccsim::placement
