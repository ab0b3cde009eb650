#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccsim/rng.hpp"

namespace ccsim::gf2 {

// Bit-packed binary vector. Bit i lives in word i/64 at position i%64;
// all positions >= size() are kept zero so equality and popcount work on
// the raw words.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t length);

  // Parses a string of '0'/'1'; character i becomes bit i.
  static BitVector from_string(std::string_view bits);
  static BitVector unit(std::size_t length, std::size_t index);
  static BitVector ones(std::size_t length);
  // length independent fair coin flips drawn from rng.
  static BitVector random(std::size_t length, SplitMix64& rng);
  // Bit i is read from byte i/8, position i%8 (little-endian bit order).
  static BitVector from_bytes(std::span<const std::uint8_t> bytes,
                              std::size_t length);

  std::size_t size() const { return len_; }
  bool empty() const { return len_ == 0; }
  bool get(std::size_t i) const;
  void set(std::size_t i, bool value = true);
  void flip(std::size_t i);

  std::size_t count() const;  // popcount
  bool any() const;
  bool none() const { return !any(); }
  std::optional<std::size_t> lowest_set_bit() const;

  BitVector& operator^=(const BitVector& other);
  friend BitVector operator^(BitVector a, const BitVector& b) {
    a ^= b;
    return a;
  }
  bool operator==(const BitVector&) const = default;

  std::string to_string() const;
  std::string to_hex() const;  // two lowercase digits per byte, byte 0 first
  std::vector<std::uint8_t> to_bytes() const;
  std::span<const std::uint64_t> words() const { return words_; }

 private:
  std::size_t len_ = 0;
  std::vector<std::uint64_t> words_;

  void trim_tail();
};

// Ordered list of equal-length rows.
class BitMatrix {
 public:
  BitMatrix() = default;
  explicit BitMatrix(std::size_t cols) : cols_(cols) {}
  explicit BitMatrix(std::vector<BitVector> rows);

  void append_row(BitVector row);
  std::size_t row_count() const { return rows_.size(); }
  std::size_t cols() const { return cols_; }
  const BitVector& row(std::size_t i) const { return rows_.at(i); }
  std::span<const BitVector> rows() const { return rows_; }

 private:
  std::size_t cols_ = 0;
  std::vector<BitVector> rows_;
};

// Incremental row-reduced basis. add() feeds rows in arrival order and
// assigns each surviving row its lowest set bit as pivot, which fixes the
// elimination order used everywhere (rank, solve, retrieval stop checks).
class SpanAccumulator {
 public:
  explicit SpanAccumulator(std::size_t width);

  // Returns true when v added a new dimension.
  bool add(BitVector v);
  bool contains(BitVector v) const;
  std::size_t rank() const { return rows_.size(); }
  std::size_t width() const { return width_; }

 private:
  std::size_t width_;
  std::vector<BitVector> rows_;
  std::vector<std::size_t> row_at_pivot_;  // column -> index into rows_, or npos
};

// Dimension of the row span over GF(2). Empty matrix -> 0.
std::size_t rank(const BitMatrix& matrix);

// Coefficients c (length = row_count) with XOR of the selected rows equal
// to target, or nullopt when target is outside the row span. Rows are
// processed in input order with lowest-index pivots, so underdetermined
// systems always yield the same solution.
std::optional<BitVector> solve(const BitMatrix& basis, const BitVector& target);

// XOR of the vectors selected by 1-coefficients; all-zero coefficients give
// the zero vector.
BitVector xor_combine(std::span<const BitVector> vectors,
                      const BitVector& coefficients);

}  // namespace ccsim::gf2
