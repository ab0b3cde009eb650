#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <vector>

#include "ccsim/coding.hpp"

using namespace ccsim;
using coding::ContentStore;
using coding::NodeCache;
using coding::Scheme;
using gf2::BitVector;

namespace {

NodeCache coded_cache(std::size_t node_id, const ContentStore& store,
                      std::size_t slots, std::uint64_t seed) {
  NodeCache cache;
  cache.node_id = node_id;
  cache.scheme = Scheme::Coded;
  SplitMix64 rng(seed);
  for (std::size_t j = 0; j < slots; ++j) {
    cache.slots.push_back(coding::encode(
        coding::draw_encoding_vector(store.content_count(), rng), store));
  }
  return cache;
}

}  // namespace

TEST_CASE("draw_encoding_vector: determinism and marginals") {
  SplitMix64 a(123), b(123);
  CHECK(coding::draw_encoding_vector(8, a) == coding::draw_encoding_vector(8, b));
  CHECK_THROWS_AS(coding::draw_encoding_vector(0, a), std::invalid_argument);

  const int trials = 100000;
  SplitMix64 rng(5);
  std::vector<int> ones(16, 0);
  for (int t = 0; t < trials; ++t) {
    auto v = coding::draw_encoding_vector(16, rng);
    for (std::size_t i = 0; i < 16; ++i) {
      if (v.get(i)) ++ones[i];
    }
  }
  for (std::size_t i = 0; i < 16; ++i) {
    double freq = ones[i] / double(trials);
    CHECK(freq == doctest::Approx(0.5).epsilon(0.02));  // 0.5 +- 0.01
  }

  SplitMix64 rng1(6);
  int one_bits = 0;
  for (int t = 0; t < trials; ++t) {
    if (coding::draw_encoding_vector(1, rng1).get(0)) ++one_bits;
  }
  CHECK(one_bits / double(trials) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("encode basics") {
  auto store = ContentStore::random(4, 64, 9);
  auto single = coding::encode(BitVector::unit(4, 2), store);
  CHECK(single.payload == store.payload(3));

  CHECK(coding::encode(BitVector(4), store).payload.none());

  // identical contents cancel
  std::vector<BitVector> dup{store.payload(1), store.payload(1),
                             store.payload(3), store.payload(4)};
  ContentStore dup_store(64, dup);
  CHECK(coding::encode(BitVector::from_string("1100"), dup_store).payload.none());

  CHECK_THROWS_AS(coding::encode(BitVector(3), store), std::invalid_argument);
}

TEST_CASE("encode linearity") {
  SplitMix64 rng(17);
  for (int iter = 0; iter < 50; ++iter) {
    std::size_t m = 1 + bounded(rng, 64);
    auto store = ContentStore::random(m, 64, rng());
    BitVector u = BitVector::random(m, rng);
    BitVector v = BitVector::random(m, rng);
    auto lhs = coding::encode(u ^ v, store).payload;
    auto rhs = coding::encode(u, store).payload ^ coding::encode(v, store).payload;
    CHECK(lhs == rhs);
  }
}

TEST_CASE("build_key frozen cases") {
  auto store = ContentStore::random(4, 64, 21);

  NodeCache self;
  self.scheme = Scheme::Coded;
  self.node_id = 0;
  self.slots.push_back(coding::encode(BitVector::unit(4, 1), store));
  auto key = coding::build_key(self, 2);
  CHECK(key.own_gains.to_string() == "1");
  CHECK(key.request_vector.none());
  CHECK(key.key_payload == store.payload(2));

  NodeCache zero;
  zero.scheme = Scheme::Coded;
  zero.slots.push_back(coding::encode(BitVector(4), store));
  zero.slots.push_back(coding::encode(BitVector(4), store));
  auto key0 = coding::build_key(zero, 3);
  CHECK(key0.key_payload.none());
  CHECK(key0.request_vector == BitVector::unit(4, 2));

  CHECK_THROWS_AS(coding::build_key(self, 0), std::invalid_argument);
  CHECK_THROWS_AS(coding::build_key(self, 5), std::invalid_argument);
}

TEST_CASE("build_key identity holds for random caches") {
  SplitMix64 rng(31);
  for (int iter = 0; iter < 100; ++iter) {
    std::size_t m = 1 + bounded(rng, 32);
    std::size_t M = 1 + bounded(rng, 8);
    auto store = ContentStore::random(m, 64, rng());
    auto cache = coded_cache(0, store, M, rng());
    std::size_t target = 1 + bounded(rng, m);
    auto key = coding::build_key(cache, target);
    auto combined = gf2::xor_combine(cache.vectors().rows(), key.own_gains);
    CHECK((key.request_vector ^ combined) == BitVector::unit(m, target - 1));
  }
}

TEST_CASE("decode_last_hop") {
  auto store = ContentStore::random(4, 64, 33);
  coding::KeyMaterial key;
  key.key_payload = store.payload(2);
  auto received = store.payload(1) ^ store.payload(2);
  CHECK(coding::decode_last_hop(received, key) == store.payload(1));

  coding::KeyMaterial zero_key;
  zero_key.key_payload = BitVector(64);
  CHECK(coding::decode_last_hop(received, zero_key) == received);

  CHECK_THROWS_AS(coding::decode_last_hop(BitVector(32), key),
                  std::invalid_argument);
}

TEST_CASE("full pipeline reproduces the requested content") {
  // assemble the aggregate directly from gf2 primitives, independent of the
  // network simulator
  SplitMix64 rng(47);
  const std::size_t m = 16, Q = 64, M = 6;
  int ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto store = ContentStore::random(m, Q, rng());
    auto requester = coded_cache(0, store, M, rng());
    std::size_t target = 1 + bounded(rng, m);
    auto key = coding::build_key(requester, target);

    // network material: random encoded files until the request is spanned
    std::vector<BitVector> vectors;
    std::vector<BitVector> payloads;
    gf2::SpanAccumulator span(m);
    while (!span.contains(key.request_vector)) {
      auto enc = coding::encode(coding::draw_encoding_vector(m, rng), store);
      span.add(enc.vector);
      vectors.push_back(enc.vector);
      payloads.push_back(enc.payload);
    }
    gf2::BitMatrix mat(m);
    for (auto& v : vectors) mat.append_row(v);
    auto gains = gf2::solve(mat, key.request_vector);
    REQUIRE(gains.has_value());
    auto aggregate = gf2::xor_combine(payloads, *gains);
    if (coding::decode_last_hop(aggregate, key) == store.payload(target)) ++ok;
  }
  CHECK(ok == 1000);
}

TEST_CASE("scramble is an involution with a uniform keystream") {
  SplitMix64 rng(55);
  for (int iter = 0; iter < 20; ++iter) {
    auto p = BitVector::random(512, rng);
    std::uint64_t seed = rng();
    CHECK(coding::descramble(coding::scramble(p, seed), seed) == p);
  }

  const std::size_t Q = 100000;
  auto keystream = coding::scramble(BitVector(Q), 2024);
  double freq = keystream.count() / double(Q);
  CHECK(freq == doctest::Approx(0.5).epsilon(0.01));  // +- 0.005

  auto other = coding::scramble(BitVector(Q), 2025);
  double diff = (keystream ^ other).count() / double(Q);
  // ~Q/2 positions differ, 3 sigma band for Bernoulli(1/2)
  CHECK(std::abs(diff - 0.5) < 3 * std::sqrt(0.25 / Q));
}

TEST_CASE("cache_update frozen cases") {
  auto store = ContentStore::random(8, 64, 71);
  SplitMix64 rng(72);
  auto fresh = BitVector::random(64, rng);
  const std::size_t k = 3;

  NodeCache direct;
  direct.scheme = Scheme::Coded;
  direct.slots.push_back(coding::encode(BitVector::unit(8, k - 1), store));
  NodeCache unrelated;
  unrelated.scheme = Scheme::Coded;
  unrelated.slots.push_back(coding::encode(BitVector::unit(8, 0), store));
  auto before = unrelated.slots[0].payload;

  std::vector<NodeCache> caches{direct, unrelated};
  auto result = coding::cache_update(caches, store, k, fresh, 99);
  CHECK(result.broadcast_bits == 64);
  CHECK(result.slots_modified == 1);
  CHECK(caches[0].slots[0].payload == store.payload(k));  // now the new file
  CHECK(caches[0].slots[0].payload == coding::scramble(fresh, 99));
  CHECK(caches[1].slots[0].payload == before);

  CHECK_THROWS_AS(coding::cache_update(caches, store, 0, fresh, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(coding::cache_update(caches, store, 9, fresh, 1),
                  std::invalid_argument);
}

TEST_CASE("cache_update keeps every slot decodable with old gains") {
  SplitMix64 rng(81);
  for (int iter = 0; iter < 25; ++iter) {
    std::size_t m = 2 + bounded(rng, 31);
    std::size_t M = 1 + bounded(rng, 8);
    std::size_t nodes = 1 + bounded(rng, 50);
    auto store = ContentStore::random(m, 64, rng());
    std::vector<NodeCache> caches;
    for (std::size_t i = 0; i < nodes; ++i) {
      caches.push_back(coded_cache(i, store, M, rng()));
    }
    std::size_t k = 1 + bounded(rng, m);
    auto fresh = BitVector::random(64, rng);
    std::uint64_t seed = rng();

    auto result = coding::cache_update(caches, store, k, fresh, seed);
    CHECK(result.slots_total == nodes * M);
    CHECK(coding::descramble(store.payload(k), seed) == fresh);

    // every slot still encodes the updated store with its old vector
    for (const auto& cache : caches) {
      for (const auto& slot : cache.slots) {
        CHECK(coding::encode(slot.vector, store).payload == slot.payload);
      }
    }
  }
}

TEST_CASE("end-to-end update: old gains decode the new content") {
  SplitMix64 rng(91);
  const std::size_t m = 8, M = 4, Q = 64, nodes = 20;
  auto store = ContentStore::random(m, Q, rng());
  std::vector<NodeCache> caches;
  for (std::size_t i = 0; i < nodes; ++i) {
    caches.push_back(coded_cache(i, store, M, rng()));
  }

  const std::size_t k = 5;
  // record decoding gains for content k over the pooled slots
  std::vector<BitVector> vectors;
  std::vector<const BitVector*> payload_refs;
  for (auto& c : caches) {
    for (auto& s : c.slots) {
      vectors.push_back(s.vector);
      payload_refs.push_back(&s.payload);
    }
  }
  gf2::BitMatrix mat(m);
  for (auto& v : vectors) mat.append_row(v);
  auto gains = gf2::solve(mat, BitVector::unit(m, k - 1));
  REQUIRE(gains.has_value());

  auto fresh = BitVector::random(Q, rng);
  coding::cache_update(caches, store, k, fresh, 1234);

  BitVector decoded(Q);
  for (std::size_t i = 0; i < payload_refs.size(); ++i) {
    if (gains->get(i)) decoded ^= *payload_refs[i];
  }
  CHECK(decoded == store.payload(k));
  CHECK(coding::descramble(decoded, 1234) == fresh);
}

TEST_CASE("store invariants and manifest round-trip") {
  CHECK_THROWS_AS(ContentStore::random(4, 60, 1), std::invalid_argument);
  CHECK_THROWS_AS(ContentStore::random(4, 0, 1), std::invalid_argument);

  auto store = ContentStore::random(3, 64, 77);
  auto dir = std::filesystem::temp_directory_path() / "ccsim_store_test";
  std::filesystem::remove_all(dir);
  store.save(dir.string(), "demo");
  auto loaded =
      ContentStore::load_manifest((dir / "demo.manifest").string());
  REQUIRE(loaded.content_count() == 3);
  CHECK(loaded.payload_bits() == 64);
  for (std::size_t i = 1; i <= 3; ++i) {
    CHECK(loaded.payload(i) == store.payload(i));
  }

  // seed-only manifest regenerates the same store as ContentStore::random
  auto seed_manifest = dir / "seeded.manifest";
  {
    std::FILE* f = std::fopen(seed_manifest.string().c_str(), "w");
    REQUIRE(f);
    std::fputs("m=3\nQ=64\nseed=77\n", f);
    std::fclose(f);
  }
  auto regenerated = ContentStore::load_manifest(seed_manifest.string());
  for (std::size_t i = 1; i <= 3; ++i) {
    CHECK(regenerated.payload(i) == store.payload(i));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("skewed stores hit the requested bit frequency") {
  std::vector<double> probs{0.9, 0.1};
  auto store = ContentStore::random_skewed(2, 80000, probs, 13);
  CHECK(store.payload(1).count() / 80000.0 == doctest::Approx(0.9).epsilon(0.01));
  CHECK(store.payload(2).count() / 80000.0 == doctest::Approx(0.1).epsilon(0.05));
  std::vector<double> bad{1.5};
  CHECK_THROWS_AS(ContentStore::random_skewed(1, 64, bad, 1),
                  std::invalid_argument);
}
