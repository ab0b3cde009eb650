#include "ccsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace ccsim::analysis {

std::string_view formula_name(FormulaId id) {
  switch (id) {
    case FormulaId::SpanExpectation: return "eq2";
    case FormulaId::CouponExpectation: return "lemma3";
    case FormulaId::GroupDrawNormalizer: return "eq8";
    case FormulaId::Throughput: return "eq14";
    case FormulaId::UncodedHit: return "eq15";
    case FormulaId::RankDeficiency: return "eq16";
    case FormulaId::CodedHit: return "eq17";
    case FormulaId::BitZero: return "bitzero";
    case FormulaId::CapacityCoded: return "capacity_coded";
    case FormulaId::CapacityUncoded: return "capacity_uncoded";
  }
  return "unknown";
}

void write_theory_csv(std::ostream& out, std::span<const TheoryPoint> points) {
  static constexpr const char* kCols[] = {"m", "M", "u", "l", "n",
                                          "s", "W", "Q", "c1", "c2"};
  out << "formula_id";
  for (const char* c : kCols) out << ',' << c;
  out << ",value\n";
  char buf[64];
  for (const auto& p : points) {
    out << formula_name(p.id);
    for (const char* c : kCols) {
      out << ',';
      auto it = p.inputs.find(c);
      if (it != p.inputs.end()) {
        std::snprintf(buf, sizeof(buf), "%.9g", it->second);
        out << buf;
      }
    }
    std::snprintf(buf, sizeof(buf), "%.9g", p.value);
    out << ',' << buf << '\n';
  }
}

double expected_vectors_uniform(std::size_t m) {
  if (m == 0) throw std::invalid_argument("expected_vectors_uniform: m >= 1");
  double excess = 0.0;
  for (std::size_t i = 1; i <= m; ++i) {
    double term = 1.0 / (std::exp2(static_cast<double>(i)) - 1.0);
    if (term < 1e-20) break;
    excess += term;
  }
  return static_cast<double>(m) + excess;
}

double harmonic(std::size_t m) {
  double h = 0.0;
  for (std::size_t i = m; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

double coupon_expectation(std::size_t m) {
  if (m == 0) throw std::invalid_argument("coupon_expectation: m >= 1");
  return static_cast<double>(m) * harmonic(m);
}

double group_draw_normalizer(std::size_t m, std::size_t M) {
  if (M < 1 || M > m) {
    throw std::invalid_argument("group_draw_normalizer: need 1 <= M <= m");
  }
  double d = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    d += static_cast<double>(m) / static_cast<double>(m - j);
  }
  return d;
}

double uncoded_hit_probability(std::size_t m, std::size_t M, std::size_t u) {
  if (M < 1 || M > m) {
    throw std::invalid_argument("uncoded_hit_probability: need 1 <= M <= m");
  }
  if (u * M < m) return 0.0;  // pigeonhole

  auto log_binom = [](std::size_t n, std::size_t k) -> long double {
    return lgammal(static_cast<long double>(n + 1)) -
           lgammal(static_cast<long double>(k + 1)) -
           lgammal(static_cast<long double>(n - k + 1));
  };
  const long double log_cmM = log_binom(m, M);
  long double sum = 0.0L;
  for (std::size_t j = 0; j + M <= m; ++j) {
    long double lg = log_binom(m, j) +
                     static_cast<long double>(u) * (log_binom(m - j, M) - log_cmM);
    long double term = expl(lg);
    sum += (j % 2 == 0) ? term : -term;
  }
  return std::clamp(static_cast<double>(sum), 0.0, 1.0);
}

double coded_rank_deficiency_probability(std::size_t l, std::size_t m,
                                         std::size_t s) {
  if (m < 1 || l < m) {
    throw std::invalid_argument("coded_rank_deficiency_probability: need l >= m >= 1");
  }
  if (s > m) {
    throw std::invalid_argument("coded_rank_deficiency_probability: need s <= m");
  }
  const std::size_t r = l - m;
  double p = std::exp2(-static_cast<double>(s) * static_cast<double>(s + r));
  for (std::size_t i = s + 1; i <= s + 64; ++i) {
    p *= 1.0 - std::exp2(-static_cast<double>(i));
  }
  for (std::size_t j = 1; j <= r + s; ++j) {
    p /= 1.0 - std::exp2(-static_cast<double>(j));
  }
  return p;
}

double coded_hit_probability(std::size_t l, std::size_t m) {
  if (l < 1 || m < 1) {
    throw std::invalid_argument("coded_hit_probability: need l, m >= 1");
  }
  if (l < m) return 0.0;
  double p = 1.0;
  const std::size_t first = l - m + 1;
  for (std::size_t i = first; i < first + 64; ++i) {
    p *= 1.0 - std::exp2(-static_cast<double>(i));
  }
  return p;
}

double coded_bit_zero_probability(std::span<const double> one_probability) {
  double prod = 1.0;
  for (double p : one_probability) {
    if (p < 0.0 || p > 1.0) {
      throw std::invalid_argument("coded_bit_zero_probability: p out of [0,1]");
    }
    prod *= 1.0 - p;
  }
  return 0.5 * (1.0 + prod);
}

double throughput_estimate(double bandwidth, double payload_bits,
                           std::size_t node_count, double expected_nodes,
                           double cell_scale, double spacing) {
  if (bandwidth <= 0 || payload_bits <= 0 || node_count == 0 ||
      expected_nodes <= 0 || cell_scale <= 0 || spacing <= 0) {
    throw std::invalid_argument("throughput_estimate: inputs must be positive");
  }
  const double n = static_cast<double>(node_count);
  const double s_sq = std::log(n) / n;
  return bandwidth /
         (n * expected_nodes * payload_bits * spacing * spacing * cell_scale *
          cell_scale * s_sq);
}

double capacity_scaling(coding::Scheme scheme, std::size_t node_count,
                        std::size_t m, std::size_t M) {
  if (M < 1 || m < M || node_count < 2) {
    throw std::invalid_argument("capacity_scaling: need m >= M >= 1, n >= 2");
  }
  const double ln_n = std::log(static_cast<double>(node_count));
  if (scheme == coding::Scheme::Coded) {
    return static_cast<double>(M) / (static_cast<double>(m) * ln_n);
  }
  if (m < 2) {
    throw std::invalid_argument("capacity_scaling: uncoded needs m >= 2");
  }
  return static_cast<double>(M) /
         (static_cast<double>(m) * std::log(static_cast<double>(m)) * ln_n);
}

double expected_nodes_coded(std::size_t m, std::size_t M) {
  if (M < 1) throw std::invalid_argument("expected_nodes_coded: M >= 1");
  return expected_vectors_uniform(m) / static_cast<double>(M);
}

double expected_nodes_coded_ceil(std::size_t m, std::size_t M) {
  return std::ceil(expected_nodes_coded(m, M));
}

double expected_nodes_uncoded(std::size_t m, std::size_t M) {
  return coupon_expectation(m) / group_draw_normalizer(m, M);
}

}  // namespace ccsim::analysis
