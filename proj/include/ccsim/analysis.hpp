#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccsim/coding.hpp"

namespace ccsim::analysis {

// Tag for the closed form behind a theory value. The serialized names are
// part of the CSV contract.
enum class FormulaId {
  SpanExpectation,      // "eq2"
  CouponExpectation,    // "lemma3"
  GroupDrawNormalizer,  // "eq8"
  Throughput,           // "eq14"
  UncodedHit,           // "eq15"
  RankDeficiency,       // "eq16"
  CodedHit,             // "eq17"
  BitZero,              // "bitzero"
  CapacityCoded,        // "capacity_coded"
  CapacityUncoded,      // "capacity_uncoded"
};

std::string_view formula_name(FormulaId id);

struct TheoryPoint {
  FormulaId id;
  std::map<std::string, double> inputs;  // keys from {m,M,u,l,n,s,W,Q,c1,c2}
  double value = 0.0;
};

// Columns: formula_id,m,M,u,l,n,s,W,Q,c1,c2,value.
void write_theory_csv(std::ostream& out, std::span<const TheoryPoint> points);

// Mean number of uniform random binary vectors needed to span an
// m-dimensional space: m + sum_{i=1..m} 1/(2^i - 1). The excess over m
// converges to about 1.6067.
double expected_vectors_uniform(std::size_t m);

double harmonic(std::size_t m);

// Mean single draws to collect all m coupons: m * H_m.
double coupon_expectation(std::size_t m);

// Mean single draws to fill one M-distinct bundle: sum_{j=0..M-1} m/(m-j).
double group_draw_normalizer(std::size_t m, std::size_t M);

// Probability that u bundles of M distinct contents cover all m contents
// (alternating inclusion-exclusion sum, evaluated via log-binomials in
// extended precision and clamped to [0,1]).
double uncoded_hit_probability(std::size_t m, std::size_t M, std::size_t u);

// Asymptotic P[rank = m - s] for an l x m uniform binary matrix, l >= m.
// Infinite products are truncated once the tail drops below 2^-64.
double coded_rank_deficiency_probability(std::size_t l, std::size_t m,
                                         std::size_t s);

// Asymptotic full-rank probability; exactly 0 for l < m.
double coded_hit_probability(std::size_t l, std::size_t m);

// P[encoded bit = 0] = (1 + prod(1 - p_l)) / 2 for independent source bits
// with per-content one-probabilities p_l.
double coded_bit_zero_probability(std::span<const double> one_probability);

// lambda(n) = W / (n * E[N] * Q * (c2 c1 s(n))^2), s(n) = sqrt(ln n / n).
double throughput_estimate(double bandwidth, double payload_bits,
                           std::size_t node_count, double expected_nodes,
                           double cell_scale, double spacing);

// Trend curves with the scaling-law constant pinned to 1: M/(m ln n) for
// coded, M/(m ln m ln n) for uncoded. Not comparable in absolute terms
// with simulated throughput.
double capacity_scaling(coding::Scheme scheme, std::size_t node_count,
                        std::size_t m, std::size_t M);

// Mean nodes whose caches must contribute before any content decodes.
double expected_nodes_coded(std::size_t m, std::size_t M);
double expected_nodes_coded_ceil(std::size_t m, std::size_t M);
double expected_nodes_uncoded(std::size_t m, std::size_t M);

}  // namespace ccsim::analysis
