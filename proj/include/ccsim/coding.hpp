#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccsim/gf2.hpp"
#include "ccsim/rng.hpp"

namespace ccsim::coding {

enum class Scheme { Coded, Uncoded };

std::string_view scheme_name(Scheme s);

// One of the m contents. index is 1-based; payload holds exactly Q bits.
struct Content {
  std::size_t index = 0;
  gf2::BitVector payload;
};

// The m equal-sized contents. Q must be a positive multiple of 8 so
// payloads round-trip through raw binary files.
class ContentStore {
 public:
  ContentStore(std::size_t payload_bits, std::vector<gf2::BitVector> payloads);

  static ContentStore random(std::size_t content_count,
                             std::size_t payload_bits, std::uint64_t seed);
  // Per-content bit-one probabilities (one entry per content, applied to
  // every bit position of that content).
  static ContentStore random_skewed(std::size_t content_count,
                                    std::size_t payload_bits,
                                    std::span<const double> one_probability,
                                    std::uint64_t seed);

  std::size_t content_count() const { return payloads_.size(); }
  std::size_t payload_bits() const { return payload_bits_; }
  const gf2::BitVector& payload(std::size_t index) const;  // 1-based
  void replace(std::size_t index, gf2::BitVector payload);

  // Plain-text manifest: "m=", "Q=", optional "seed=", optional
  // "content <index> <relative path>" lines. Contents without an explicit
  // file are regenerated from the seed.
  static ContentStore load_manifest(const std::string& manifest_path);
  // Writes <name>.manifest plus one <name>_<index>.bin per content.
  void save(const std::string& directory, const std::string& name) const;

 private:
  std::size_t payload_bits_ = 0;
  std::vector<gf2::BitVector> payloads_;
};

// Cached coded file: encoding vector over the m contents plus the XOR of
// the selected payloads.
struct EncodedFile {
  gf2::BitVector vector;   // length m
  gf2::BitVector payload;  // length Q
};

// One node's cache: M coded slots, or M distinct contents in the clear.
struct NodeCache {
  std::size_t node_id = 0;
  Scheme scheme = Scheme::Coded;
  std::vector<EncodedFile> slots;     // coded scheme
  std::vector<Content> plain_slots;   // uncoded scheme

  std::size_t slot_count() const {
    return scheme == Scheme::Coded ? slots.size() : plain_slots.size();
  }
  gf2::BitMatrix vectors() const;  // coded only
  bool holds_index(std::size_t index) const;  // uncoded only
};

// Requester-side key for the last-hop cipher. The defining identity,
// unit(target) == request_vector XOR combine(cache vectors, own_gains),
// holds for every instance by construction.
struct KeyMaterial {
  gf2::BitVector request_vector;  // what the network must deliver
  gf2::BitVector key_payload;     // XOR of the requester's selected slots
  gf2::BitVector own_gains;       // which slots feed the key
};

// Uniform draw from all 2^m binary vectors; the zero vector is permitted.
gf2::BitVector draw_encoding_vector(std::size_t length, SplitMix64& rng);

EncodedFile encode(const gf2::BitVector& vector, const ContentStore& store);

// Deterministic gain rule: when unit(target) lies in the span of the
// cache vectors, own_gains is the elimination solution (request_vector
// becomes zero); otherwise own_gains selects every slot.
KeyMaterial build_key(const NodeCache& cache, std::size_t target);

gf2::BitVector decode_last_hop(const gf2::BitVector& received,
                               const KeyMaterial& key);

// XOR with the splitmix64 word keystream for the given seed; an
// involution, so descramble is the same operation.
gf2::BitVector scramble(const gf2::BitVector& payload, std::uint64_t seed);
gf2::BitVector descramble(const gf2::BitVector& payload, std::uint64_t seed);

std::string_view keystream_id();  // recorded in experiment output metadata

struct UpdateResult {
  std::size_t broadcast_bits = 0;  // always exactly Q, broadcast once
  std::size_t slots_modified = 0;
  std::size_t slots_total = 0;
};

// Replaces content k with scramble(new_payload, seed) network-wide: one
// Q-bit broadcast of old XOR new, applied to every slot whose encoding
// vector selects k. Old decoding gains keep working against the updated
// store.
UpdateResult cache_update(std::span<NodeCache> caches, ContentStore& store,
                          std::size_t replaced_index,
                          const gf2::BitVector& new_payload,
                          std::uint64_t scramble_seed);

}  // namespace ccsim::coding
