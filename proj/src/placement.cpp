#include "ccsim/placement.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "ccsim/errors.hpp"

namespace ccsim::placement {

bool PlacementConfig::secrecy_regime() const {
  if (cache_slots >= 63) return true;
  return content_count < (std::uint64_t{1} << cache_slots);
}

void PlacementConfig::validate() const {
  if (content_count == 0) throw ConfigError("placement: m must be >= 1");
  if (cache_slots == 0) throw ConfigError("placement: M must be >= 1");
  if (scheme == coding::Scheme::Uncoded && cache_slots > content_count) {
    throw ConfigError("placement: uncoded scheme needs M <= m");
  }
  if (scheme == coding::Scheme::Coded && independence &&
      cache_slots > content_count) {
    throw ConfigError("placement: independence mode needs M <= m");
  }
}

std::vector<gf2::BitVector> draw_slot_vectors(const PlacementConfig& config,
                                              std::size_t node_id) {
  config.validate();
  SplitMix64 rng(mix_seed({config.seed, node_id}));
  std::vector<gf2::BitVector> out;
  out.reserve(config.cache_slots);
  if (config.independence) {
    gf2::SpanAccumulator span(config.content_count);
    while (out.size() < config.cache_slots) {
      auto v = coding::draw_encoding_vector(config.content_count, rng);
      if (span.add(v)) out.push_back(std::move(v));
    }
  } else {
    for (std::size_t j = 0; j < config.cache_slots; ++j) {
      out.push_back(coding::draw_encoding_vector(config.content_count, rng));
    }
  }
  return out;
}

std::vector<std::size_t> draw_slot_indices(const PlacementConfig& config,
                                           std::size_t node_id) {
  config.validate();
  SplitMix64 rng(mix_seed({config.seed, node_id}));
  const std::size_t m = config.content_count;
  const std::size_t M = config.cache_slots;
  std::vector<std::size_t> out;
  out.reserve(M);
  if (M * 4 <= m) {
    // rejection sampling; expected extra draws are small for M << m
    while (out.size() < M) {
      std::size_t idx = 1 + bounded(rng, m);
      if (std::find(out.begin(), out.end(), idx) == out.end()) {
        out.push_back(idx);
      }
    }
  } else {
    std::vector<std::size_t> pool(m);
    std::iota(pool.begin(), pool.end(), 1);
    for (std::size_t j = 0; j < M; ++j) {
      std::size_t k = j + bounded(rng, m - j);
      std::swap(pool[j], pool[k]);
      out.push_back(pool[j]);
    }
  }
  return out;
}

coding::NodeCache place_coded(const PlacementConfig& config,
                              const coding::ContentStore& store,
                              std::size_t node_id) {
  if (store.content_count() != config.content_count) {
    throw ConfigError("place_coded: store size != configured m");
  }
  coding::NodeCache cache;
  cache.node_id = node_id;
  cache.scheme = coding::Scheme::Coded;
  for (auto& v : draw_slot_vectors(config, node_id)) {
    cache.slots.push_back(coding::encode(v, store));
  }
  return cache;
}

coding::NodeCache place_uncoded(const PlacementConfig& config,
                                const coding::ContentStore& store,
                                std::size_t node_id) {
  if (store.content_count() != config.content_count) {
    throw ConfigError("place_uncoded: store size != configured m");
  }
  coding::NodeCache cache;
  cache.node_id = node_id;
  cache.scheme = coding::Scheme::Uncoded;
  for (std::size_t idx : draw_slot_indices(config, node_id)) {
    cache.plain_slots.push_back(coding::Content{idx, store.payload(idx)});
  }
  return cache;
}

coding::NodeCache place_node(const PlacementConfig& config,
                             const coding::ContentStore& store,
                             std::size_t node_id) {
  return config.scheme == coding::Scheme::Coded
             ? place_coded(config, store, node_id)
             : place_uncoded(config, store, node_id);
}

std::vector<coding::NodeCache> place_all(const PlacementConfig& config,
                                         const coding::ContentStore& store,
                                         std::size_t node_count) {
  std::vector<coding::NodeCache> caches;
  caches.reserve(node_count);
  for (std::size_t id = 0; id < node_count; ++id) {
    caches.push_back(place_node(config, store, id));
  }
  return caches;
}

std::vector<coding::NodeCache> place_all_light(const PlacementConfig& config,
                                               std::size_t node_count) {
  std::vector<coding::NodeCache> caches;
  caches.reserve(node_count);
  for (std::size_t id = 0; id < node_count; ++id) {
    coding::NodeCache cache;
    cache.node_id = id;
    cache.scheme = config.scheme;
    if (config.scheme == coding::Scheme::Coded) {
      for (auto& v : draw_slot_vectors(config, id)) {
        cache.slots.push_back(coding::EncodedFile{std::move(v), {}});
      }
    } else {
      for (std::size_t idx : draw_slot_indices(config, id)) {
        cache.plain_slots.push_back(coding::Content{idx, {}});
      }
    }
    caches.push_back(std::move(cache));
  }
  return caches;
}

namespace {

std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace

void write_cache_snapshot(std::ostream& out,
                          std::span<const coding::NodeCache> caches) {
  out << "node_id,slot,scheme,index,vector_hex,payload_fnv64\n";
  for (const auto& cache : caches) {
    if (cache.scheme == coding::Scheme::Coded) {
      for (std::size_t j = 0; j < cache.slots.size(); ++j) {
        const auto& s = cache.slots[j];
        out << cache.node_id << ',' << j << ",coded,,"
            << s.vector.to_hex() << ',' << hex64(fnv1a64(s.payload.to_bytes()))
            << '\n';
      }
    } else {
      for (std::size_t j = 0; j < cache.plain_slots.size(); ++j) {
        const auto& s = cache.plain_slots[j];
        out << cache.node_id << ',' << j << ",uncoded," << s.index << ",,"
            << hex64(fnv1a64(s.payload.to_bytes())) << '\n';
      }
    }
  }
}

}  // namespace ccsim::placement
