#include "ccsim/coding.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ccsim::coding {

namespace fs = std::filesystem;

std::string_view scheme_name(Scheme s) {
  return s == Scheme::Coded ? "coded" : "uncoded";
}

ContentStore::ContentStore(std::size_t payload_bits,
                           std::vector<gf2::BitVector> payloads)
    : payload_bits_(payload_bits), payloads_(std::move(payloads)) {
  if (payload_bits_ == 0 || payload_bits_ % 8 != 0) {
    throw std::invalid_argument("ContentStore: Q must be a positive multiple of 8");
  }
  if (payloads_.empty()) {
    throw std::invalid_argument("ContentStore: no contents");
  }
  for (const auto& p : payloads_) {
    if (p.size() != payload_bits_) {
      throw std::invalid_argument("ContentStore: payload size mismatch");
    }
  }
}

ContentStore ContentStore::random(std::size_t content_count,
                                  std::size_t payload_bits,
                                  std::uint64_t seed) {
  std::vector<gf2::BitVector> payloads;
  payloads.reserve(content_count);
  for (std::size_t i = 1; i <= content_count; ++i) {
    SplitMix64 rng(mix_seed({seed, i}));
    payloads.push_back(gf2::BitVector::random(payload_bits, rng));
  }
  return ContentStore(payload_bits, std::move(payloads));
}

ContentStore ContentStore::random_skewed(std::size_t content_count,
                                         std::size_t payload_bits,
                                         std::span<const double> one_probability,
                                         std::uint64_t seed) {
  if (one_probability.size() != content_count) {
    throw std::invalid_argument("random_skewed: need one probability per content");
  }
  std::vector<gf2::BitVector> payloads;
  payloads.reserve(content_count);
  for (std::size_t i = 1; i <= content_count; ++i) {
    double p = one_probability[i - 1];
    if (p < 0.0 || p > 1.0) {
      throw std::invalid_argument("random_skewed: probability out of [0,1]");
    }
    SplitMix64 rng(mix_seed({seed, i}));
    gf2::BitVector v(payload_bits);
    for (std::size_t b = 0; b < payload_bits; ++b) {
      if (unit_real(rng) < p) v.set(b);
    }
    payloads.push_back(std::move(v));
  }
  return ContentStore(payload_bits, std::move(payloads));
}

const gf2::BitVector& ContentStore::payload(std::size_t index) const {
  if (index < 1 || index > payloads_.size()) {
    throw std::invalid_argument("ContentStore::payload: index out of range");
  }
  return payloads_[index - 1];
}

void ContentStore::replace(std::size_t index, gf2::BitVector payload) {
  if (index < 1 || index > payloads_.size()) {
    throw std::invalid_argument("ContentStore::replace: index out of range");
  }
  if (payload.size() != payload_bits_) {
    throw std::invalid_argument("ContentStore::replace: payload size mismatch");
  }
  payloads_[index - 1] = std::move(payload);
}

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return data;
}

}  // namespace

ContentStore ContentStore::load_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open " + manifest_path);
  fs::path base = fs::path(manifest_path).parent_path();

  std::size_t m = 0;
  std::size_t q = 0;
  bool have_seed = false;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::size_t, std::string>> files;

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (line.rfind("content", 0) == 0) {
      std::string kw, path;
      std::size_t idx;
      ls >> kw >> idx >> path;
      if (!ls || path.empty()) {
        throw std::runtime_error("manifest: bad content line: " + line);
      }
      files.emplace_back(idx, path);
    } else {
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::runtime_error("manifest: bad line: " + line);
      }
      std::string key = line.substr(0, eq);
      std::string value = line.substr(eq + 1);
      if (key == "m") {
        m = std::stoull(value);
      } else if (key == "Q") {
        q = std::stoull(value);
      } else if (key == "seed") {
        seed = std::stoull(value);
        have_seed = true;
      } else {
        throw std::runtime_error("manifest: unknown key: " + key);
      }
    }
  }
  if (m == 0 || q == 0) throw std::runtime_error("manifest: m and Q required");

  std::vector<gf2::BitVector> payloads(m);
  std::vector<bool> present(m, false);
  for (const auto& [idx, rel] : files) {
    if (idx < 1 || idx > m) throw std::runtime_error("manifest: index out of range");
    auto bytes = read_file(base / rel);
    if (bytes.size() != q / 8) {
      throw std::runtime_error("manifest: payload file size != Q/8 bytes");
    }
    payloads[idx - 1] = gf2::BitVector::from_bytes(bytes, q);
    present[idx - 1] = true;
  }
  for (std::size_t i = 1; i <= m; ++i) {
    if (present[i - 1]) continue;
    if (!have_seed) {
      throw std::runtime_error("manifest: content " + std::to_string(i) +
                               " has no file and no seed is given");
    }
    SplitMix64 rng(mix_seed({seed, i}));
    payloads[i - 1] = gf2::BitVector::random(q, rng);
  }
  return ContentStore(q, std::move(payloads));
}

void ContentStore::save(const std::string& directory,
                        const std::string& name) const {
  fs::path dir(directory);
  fs::create_directories(dir);
  std::ofstream mf(dir / (name + ".manifest"));
  if (!mf) throw std::runtime_error("cannot write manifest");
  mf << "m=" << content_count() << "\n";
  mf << "Q=" << payload_bits_ << "\n";
  for (std::size_t i = 1; i <= content_count(); ++i) {
    std::string file = name + "_" + std::to_string(i) + ".bin";
    auto bytes = payloads_[i - 1].to_bytes();
    std::ofstream out(dir / file, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    mf << "content " << i << " " << file << "\n";
  }
}

gf2::BitMatrix NodeCache::vectors() const {
  if (scheme != Scheme::Coded) {
    throw std::invalid_argument("NodeCache::vectors: uncoded cache");
  }
  gf2::BitMatrix mat(slots.empty() ? 0 : slots.front().vector.size());
  for (const auto& s : slots) mat.append_row(s.vector);
  return mat;
}

bool NodeCache::holds_index(std::size_t index) const {
  for (const auto& c : plain_slots) {
    if (c.index == index) return true;
  }
  return false;
}

gf2::BitVector draw_encoding_vector(std::size_t length, SplitMix64& rng) {
  if (length == 0) {
    throw std::invalid_argument("draw_encoding_vector: length must be >= 1");
  }
  return gf2::BitVector::random(length, rng);
}

EncodedFile encode(const gf2::BitVector& vector, const ContentStore& store) {
  if (vector.size() != store.content_count()) {
    throw std::invalid_argument("encode: vector length != content count");
  }
  gf2::BitVector payload(store.payload_bits());
  for (std::size_t i = 0; i < vector.size(); ++i) {
    if (vector.get(i)) payload ^= store.payload(i + 1);
  }
  return EncodedFile{vector, std::move(payload)};
}

KeyMaterial build_key(const NodeCache& cache, std::size_t target) {
  if (cache.scheme != Scheme::Coded || cache.slots.empty()) {
    throw std::invalid_argument("build_key: need a non-empty coded cache");
  }
  const std::size_t m = cache.slots.front().vector.size();
  if (target < 1 || target > m) {
    throw std::invalid_argument("build_key: target out of range");
  }
  gf2::BitVector unit = gf2::BitVector::unit(m, target - 1);
  gf2::BitMatrix mat = cache.vectors();

  gf2::BitVector gains;
  if (auto sol = gf2::solve(mat, unit)) {
    gains = std::move(*sol);
  } else {
    gains = gf2::BitVector::ones(cache.slots.size());
  }

  gf2::BitVector combined = gf2::xor_combine(mat.rows(), gains);
  gf2::BitVector request = unit ^ combined;

  std::vector<gf2::BitVector> payloads;
  payloads.reserve(cache.slots.size());
  for (const auto& s : cache.slots) payloads.push_back(s.payload);
  gf2::BitVector key = gf2::xor_combine(payloads, gains);

  return KeyMaterial{std::move(request), std::move(key), std::move(gains)};
}

gf2::BitVector decode_last_hop(const gf2::BitVector& received,
                               const KeyMaterial& key) {
  if (received.size() != key.key_payload.size()) {
    throw std::invalid_argument("decode_last_hop: length mismatch");
  }
  return received ^ key.key_payload;
}

gf2::BitVector scramble(const gf2::BitVector& payload, std::uint64_t seed) {
  SplitMix64 rng(seed);
  return payload ^ gf2::BitVector::random(payload.size(), rng);
}

gf2::BitVector descramble(const gf2::BitVector& payload, std::uint64_t seed) {
  return scramble(payload, seed);
}

std::string_view keystream_id() { return "splitmix64"; }

UpdateResult cache_update(std::span<NodeCache> caches, ContentStore& store,
                          std::size_t replaced_index,
                          const gf2::BitVector& new_payload,
                          std::uint64_t scramble_seed) {
  const std::size_t m = store.content_count();
  if (replaced_index < 1 || replaced_index > m) {
    throw std::invalid_argument("cache_update: replaced index out of range");
  }
  if (new_payload.size() != store.payload_bits()) {
    throw std::invalid_argument("cache_update: payload size mismatch");
  }

  gf2::BitVector scrambled = scramble(new_payload, scramble_seed);
  gf2::BitVector broadcast = store.payload(replaced_index) ^ scrambled;

  UpdateResult result;
  result.broadcast_bits = store.payload_bits();
  for (auto& cache : caches) {
    if (cache.scheme == Scheme::Coded) {
      for (auto& slot : cache.slots) {
        ++result.slots_total;
        if (slot.vector.get(replaced_index - 1)) {
          slot.payload ^= broadcast;
          ++result.slots_modified;
        }
      }
    } else {
      for (auto& slot : cache.plain_slots) {
        ++result.slots_total;
        if (slot.index == replaced_index) {
          slot.payload ^= broadcast;
          ++result.slots_modified;
        }
      }
    }
  }
  store.replace(replaced_index, std::move(scrambled));
  return result;
}

}  // namespace ccsim::coding
