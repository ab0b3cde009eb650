#include "ccsim/gf2.hpp"

#include <bit>
#include <limits>
#include <stdexcept>

namespace ccsim::gf2 {

namespace {
constexpr std::size_t kWordBits = 64;
constexpr std::size_t kNpos = std::numeric_limits<std::size_t>::max();

std::size_t words_for(std::size_t bits) { return (bits + kWordBits - 1) / kWordBits; }
}  // namespace

BitVector::BitVector(std::size_t length)
    : len_(length), words_(words_for(length), 0) {}

void BitVector::trim_tail() {
  if (len_ % kWordBits != 0 && !words_.empty()) {
    words_.back() &= (std::uint64_t{1} << (len_ % kWordBits)) - 1;
  }
}

BitVector BitVector::from_string(std::string_view bits) {
  BitVector v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      v.set(i);
    } else if (bits[i] != '0') {
      throw std::invalid_argument("BitVector::from_string: bad character");
    }
  }
  return v;
}

BitVector BitVector::unit(std::size_t length, std::size_t index) {
  BitVector v(length);
  v.set(index);
  return v;
}

BitVector BitVector::ones(std::size_t length) {
  BitVector v(length);
  for (auto& w : v.words_) w = ~std::uint64_t{0};
  v.trim_tail();
  return v;
}

BitVector BitVector::random(std::size_t length, SplitMix64& rng) {
  BitVector v(length);
  for (auto& w : v.words_) w = rng();
  v.trim_tail();
  return v;
}

BitVector BitVector::from_bytes(std::span<const std::uint8_t> bytes,
                                std::size_t length) {
  if (bytes.size() * 8 < length) {
    throw std::invalid_argument("BitVector::from_bytes: too few bytes");
  }
  BitVector v(length);
  for (std::size_t i = 0; i < v.words_.size(); ++i) {
    std::uint64_t w = 0;
    for (std::size_t b = 0; b < 8; ++b) {
      std::size_t byte = i * 8 + b;
      if (byte < bytes.size()) w |= std::uint64_t{bytes[byte]} << (8 * b);
    }
    v.words_[i] = w;
  }
  v.trim_tail();
  return v;
}

bool BitVector::get(std::size_t i) const {
  if (i >= len_) throw std::out_of_range("BitVector::get");
  return (words_[i / kWordBits] >> (i % kWordBits)) & 1;
}

void BitVector::set(std::size_t i, bool value) {
  if (i >= len_) throw std::out_of_range("BitVector::set");
  std::uint64_t mask = std::uint64_t{1} << (i % kWordBits);
  if (value) {
    words_[i / kWordBits] |= mask;
  } else {
    words_[i / kWordBits] &= ~mask;
  }
}

void BitVector::flip(std::size_t i) {
  if (i >= len_) throw std::out_of_range("BitVector::flip");
  words_[i / kWordBits] ^= std::uint64_t{1} << (i % kWordBits);
}

std::size_t BitVector::count() const {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

bool BitVector::any() const {
  for (auto w : words_) {
    if (w != 0) return true;
  }
  return false;
}

std::optional<std::size_t> BitVector::lowest_set_bit() const {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] != 0) {
      return i * kWordBits +
             static_cast<std::size_t>(std::countr_zero(words_[i]));
    }
  }
  return std::nullopt;
}

BitVector& BitVector::operator^=(const BitVector& other) {
  if (len_ != other.len_) {
    throw std::invalid_argument("BitVector xor: length mismatch");
  }
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
  return *this;
}

std::string BitVector::to_string() const {
  std::string s(len_, '0');
  for (std::size_t i = 0; i < len_; ++i) {
    if (get(i)) s[i] = '1';
  }
  return s;
}

std::vector<std::uint8_t> BitVector::to_bytes() const {
  std::vector<std::uint8_t> out((len_ + 7) / 8, 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(
        (words_[i / 8] >> (8 * (i % 8))) & 0xff);
  }
  return out;
}

std::string BitVector::to_hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  for (std::uint8_t b : to_bytes()) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

BitMatrix::BitMatrix(std::vector<BitVector> rows) {
  if (!rows.empty()) {
    cols_ = rows.front().size();
    for (const auto& r : rows) {
      if (r.size() != cols_) {
        throw std::invalid_argument("BitMatrix: rows of unequal length");
      }
    }
  }
  rows_ = std::move(rows);
}

void BitMatrix::append_row(BitVector row) {
  if (rows_.empty() && cols_ == 0) {
    cols_ = row.size();
  } else if (row.size() != cols_) {
    throw std::invalid_argument("BitMatrix::append_row: length mismatch");
  }
  rows_.push_back(std::move(row));
}

SpanAccumulator::SpanAccumulator(std::size_t width)
    : width_(width), row_at_pivot_(width, kNpos) {}

bool SpanAccumulator::add(BitVector v) {
  if (v.size() != width_) {
    throw std::invalid_argument("SpanAccumulator::add: length mismatch");
  }
  while (auto p = v.lowest_set_bit()) {
    std::size_t slot = row_at_pivot_[*p];
    if (slot == kNpos) {
      row_at_pivot_[*p] = rows_.size();
      rows_.push_back(std::move(v));
      return true;
    }
    v ^= rows_[slot];
  }
  return false;
}

bool SpanAccumulator::contains(BitVector v) const {
  if (v.size() != width_) {
    throw std::invalid_argument("SpanAccumulator::contains: length mismatch");
  }
  while (auto p = v.lowest_set_bit()) {
    std::size_t slot = row_at_pivot_[*p];
    if (slot == kNpos) return false;
    v ^= rows_[slot];
  }
  return true;
}

std::size_t rank(const BitMatrix& matrix) {
  SpanAccumulator acc(matrix.cols());
  for (const auto& r : matrix.rows()) acc.add(r);
  return acc.rank();
}

std::optional<BitVector> solve(const BitMatrix& basis, const BitVector& target) {
  if (target.size() != basis.cols()) {
    throw std::invalid_argument("solve: target length != basis cols");
  }
  const std::size_t l = basis.row_count();
  std::vector<BitVector> reduced;
  std::vector<BitVector> combo;  // combination of input rows per reduced row
  std::vector<std::size_t> row_at_pivot(basis.cols(), kNpos);

  for (std::size_t i = 0; i < l; ++i) {
    BitVector v = basis.row(i);
    BitVector c = BitVector::unit(l, i);
    while (auto p = v.lowest_set_bit()) {
      std::size_t slot = row_at_pivot[*p];
      if (slot == kNpos) {
        row_at_pivot[*p] = reduced.size();
        reduced.push_back(std::move(v));
        combo.push_back(std::move(c));
        break;
      }
      v ^= reduced[slot];
      c ^= combo[slot];
    }
  }

  BitVector v = target;
  BitVector c(l);
  while (auto p = v.lowest_set_bit()) {
    std::size_t slot = row_at_pivot[*p];
    if (slot == kNpos) return std::nullopt;
    v ^= reduced[slot];
    c ^= combo[slot];
  }
  return c;
}

BitVector xor_combine(std::span<const BitVector> vectors,
                      const BitVector& coefficients) {
  if (coefficients.size() != vectors.size()) {
    throw std::invalid_argument("xor_combine: coefficient count mismatch");
  }
  BitVector out(vectors.empty() ? 0 : vectors.front().size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != out.size()) {
      throw std::invalid_argument("xor_combine: vector length mismatch");
    }
    if (coefficients.get(i)) out ^= vectors[i];
  }
  return out;
}

}  // namespace ccsim::gf2
