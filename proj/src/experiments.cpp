#include "ccsim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ccsim/errors.hpp"
#include "ccsim/placement.hpp"

namespace ccsim::experiments {

namespace {

using coding::Scheme;
using netsim::Direction;
using netsim::Mode;
using netsim::Routing;

// Integer accumulator: exact sums make the aggregate independent of trial
// execution order.
struct IntStats {
  std::uint64_t count = 0;
  std::uint64_t sum = 0;
  std::uint64_t sum_sq = 0;

  void add(std::uint64_t v) {
    ++count;
    sum += v;
    sum_sq += v * v;
  }
  double mean() const {
    return count == 0 ? 0.0
                      : static_cast<double>(sum) / static_cast<double>(count);
  }
  double std_error() const {
    if (count < 2) return 0.0;
    double n = static_cast<double>(count);
    double var = (static_cast<double>(sum_sq) -
                  n * mean() * mean()) /
                 (n - 1.0);
    return std::sqrt(std::max(0.0, var) / n);
  }
};

struct BinomialStats {
  std::uint64_t count = 0;
  std::uint64_t hits = 0;

  void add(bool hit) {
    ++count;
    if (hit) ++hits;
  }
  double mean() const {
    return count == 0 ? 0.0
                      : static_cast<double>(hits) / static_cast<double>(count);
  }
  double std_error() const {
    if (count == 0) return 0.0;
    double p = mean();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(count));
  }
};

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::uint64_t kind_tag(ExperimentKind k) {
  return static_cast<std::uint64_t>(k) + 1;
}

class TrialLog {
 public:
  explicit TrialLog(const std::string& path) {
    if (!path.empty()) {
      out_.open(path);
      if (!out_) throw ConfigError("cannot open trial log: " + path);
      netsim::write_trial_log_header(out_);
    }
  }
  void record(std::uint64_t seed, const netsim::RetrievalResult& r,
              std::size_t n, std::size_t m, std::size_t M) {
    if (out_.is_open()) netsim::write_trial_log_row(out_, seed, r, n, m, M);
  }

 private:
  std::ofstream out_;
};

struct Checker {
  bool enabled = false;
  std::vector<std::string>* failures = nullptr;

  void expect(bool ok, const std::string& what) const {
    if (enabled && !ok) failures->push_back(what);
  }
};

}  // namespace

std::string_view experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Hops: return "hops";
    case ExperimentKind::Hit: return "hit";
    case ExperimentKind::Security: return "security";
    case ExperimentKind::Update: return "update";
    case ExperimentKind::CapacityTrend: return "capacity-trend";
  }
  return "?";
}

std::uint64_t trial_seed(std::uint64_t master, ExperimentKind kind,
                         std::size_t point_index, std::size_t trial_index) {
  return mix_seed({master, kind_tag(kind), point_index + 1, trial_index + 1});
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (content_counts.empty()) throw ConfigError("at least one m required");
  if (cache_sizes.empty()) throw ConfigError("at least one M required");
  if (schemes.empty()) throw ConfigError("at least one scheme required");
  if (payload_bits == 0 || payload_bits % 8 != 0) {
    throw ConfigError("Q must be a positive multiple of 8");
  }
  if (cell_scale <= 0) throw ConfigError("c1 must be > 0");
  if (guard < 0) throw ConfigError("delta must be >= 0");
  if (group_scale <= 0) throw ConfigError("c4 must be > 0");
  if (bandwidth <= 0) throw ConfigError("W must be > 0");
  if (skew < 0 || skew > 1) throw ConfigError("skew must be in [0,1]");
  for (auto m : content_counts) {
    if (m == 0) throw ConfigError("m must be >= 1");
  }
  for (auto M : cache_sizes) {
    if (M == 0) throw ConfigError("M must be >= 1");
  }

  const bool uses_uncoded =
      std::find(schemes.begin(), schemes.end(), Scheme::Uncoded) != schemes.end();
  auto require_fit = [&](std::size_t m) {
    for (auto M : cache_sizes) {
      if (uses_uncoded && M > m) {
        throw ConfigError("uncoded scheme needs M <= m (M=" + std::to_string(M) +
                          ", m=" + std::to_string(m) + ")");
      }
      if (independence && M > m) {
        throw ConfigError("independence mode needs M <= m");
      }
    }
  };

  switch (experiment) {
    case ExperimentKind::Hops:
      if (content_counts.size() != 1) throw ConfigError("hops: exactly one m");
      if (node_count < 2) throw ConfigError("hops: n >= 2");
      if (routing == Routing::Reactive && directions.empty()) {
        throw ConfigError("hops: at least one direction");
      }
      require_fit(content_counts.front());
      break;
    case ExperimentKind::Hit:
      if (content_counts.size() != 1) throw ConfigError("hit: exactly one m");
      if (slot_totals.empty()) throw ConfigError("hit: at least one l required");
      require_fit(content_counts.front());
      break;
    case ExperimentKind::Security:
      if (node_count < 2) throw ConfigError("security: n >= 2");
      break;
    case ExperimentKind::Update:
      if (content_counts.size() != 1) throw ConfigError("update: exactly one m");
      if (node_count < 2) throw ConfigError("update: n >= 2");
      if (trials > node_count) throw ConfigError("update: trials <= n");
      break;
    case ExperimentKind::CapacityTrend:
      if (node_count < 2) throw ConfigError("capacity-trend: n >= 2");
      for (auto m : content_counts) require_fit(m);
      break;
  }
}

const MetricRow* ExperimentReport::find(const std::string& metric,
                                        std::optional<Scheme> scheme,
                                        std::optional<std::size_t> m,
                                        std::optional<std::size_t> M,
                                        std::optional<std::size_t> l,
                                        std::optional<Direction> dir) const {
  for (const auto& row : rows) {
    if (row.metric != metric) continue;
    if (scheme && row.scheme != scheme) continue;
    if (m && row.content_count != m) continue;
    if (M && row.cache_size != M) continue;
    if (l && row.slot_total != l) continue;
    if (dir && row.direction != dir) continue;
    return &row;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// hops

ExperimentReport run_hop_experiment(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = cfg;
  Checker check{cfg.check, &report.check_failures};
  TrialLog log(cfg.trial_log_path);

  const std::size_t m = cfg.content_counts.front();
  const std::size_t n = cfg.node_count;
  std::size_t point = 0;

  for (Scheme scheme : cfg.schemes) {
    for (std::size_t M : cfg.cache_sizes) {
      double theory = scheme == Scheme::Coded
                          ? analysis::expected_nodes_coded_ceil(m, M)
                          : analysis::expected_nodes_uncoded(m, M);
      auto formula = scheme == Scheme::Coded
                         ? analysis::FormulaId::SpanExpectation
                         : analysis::FormulaId::GroupDrawNormalizer;

      if (cfg.routing == Routing::Reactive) {
        IntStats pooled;
        BinomialStats pooled_success;
        std::vector<IntStats> per_dir(cfg.directions.size());
        std::vector<MetricRow> dir_rows;
        for (std::size_t d = 0; d < cfg.directions.size(); ++d) {
          BinomialStats success;
          for (std::size_t t = 0; t < cfg.trials; ++t) {
            std::uint64_t ts = trial_seed(cfg.seed, cfg.experiment, point, t);
            auto store = coding::ContentStore::random(m, cfg.payload_bits,
                                                      mix_seed({ts, 1}));
            auto topo = netsim::build_topology(n, cfg.cell_scale, cfg.guard,
                                               mix_seed({ts, 2}));
            placement::PlacementConfig pc{scheme, m, M, cfg.independence,
                                          mix_seed({ts, 3})};
            auto caches = placement::place_all_light(pc, n);
            SplitMix64 rng(mix_seed({ts, 4}));
            std::size_t requester = bounded(rng, n);
            auto res = netsim::reactive_walk(topo, caches, store, requester,
                                             cfg.directions[d], scheme,
                                             Mode::AllContents, 0, rng);
            per_dir[d].add(res.hops);
            pooled.add(res.hops);
            success.add(res.success);
            pooled_success.add(res.success);
            log.record(ts, res, n, m, M);
          }
          MetricRow row;
          row.metric = "hops";
          row.scheme = scheme;
          row.routing = Routing::Reactive;
          row.mode = Mode::AllContents;
          row.direction = cfg.directions[d];
          row.node_count = n;
          row.content_count = m;
          row.cache_size = M;
          row.mean = per_dir[d].mean();
          row.std_error = per_dir[d].std_error();
          row.trials = per_dir[d].count;
          row.theory = theory;
          row.formula = formula;
          dir_rows.push_back(row);
          report.rows.push_back(row);

          MetricRow srow = row;
          srow.metric = "success_rate";
          srow.mean = success.mean();
          srow.std_error = success.std_error();
          srow.theory.reset();
          srow.formula.reset();
          report.rows.push_back(srow);
          ++point;
        }
        MetricRow prow;
        prow.metric = "hops";
        prow.scheme = scheme;
        prow.routing = Routing::Reactive;
        prow.mode = Mode::AllContents;
        prow.node_count = n;
        prow.content_count = m;
        prow.cache_size = M;
        prow.mean = pooled.mean();
        prow.std_error = pooled.std_error();
        prow.trials = pooled.count;
        prow.theory = theory;
        prow.formula = formula;
        report.rows.push_back(prow);

        if (m == 100 && M == 25) {
          if (scheme == Scheme::Coded) {
            check.expect(pooled.mean() < 5.0,
                         "coded hops m=100 M=25: mean " + fmt9(pooled.mean()) +
                             " expected < 5");
          } else {
            check.expect(pooled.mean() >= 17.0 && pooled.mean() <= 23.0,
                         "uncoded hops m=100 M=25: mean " + fmt9(pooled.mean()) +
                             " expected in [17,23]");
          }
          check.expect(pooled_success.mean() == 1.0,
                       std::string(coding::scheme_name(scheme)) +
                           " hops m=100 M=25: success rate " +
                           fmt9(pooled_success.mean()) + " expected 1");
        }
        if (scheme == Scheme::Coded) {
          for (std::size_t a = 0; a < dir_rows.size(); ++a) {
            for (std::size_t b = a + 1; b < dir_rows.size(); ++b) {
              double diff = std::abs(dir_rows[a].mean - dir_rows[b].mean);
              double band = 2.0 * std::hypot(*dir_rows[a].std_error,
                                             *dir_rows[b].std_error);
              check.expect(
                  diff <= band,
                  "direction means M=" + std::to_string(M) + " " +
                      std::string(netsim::direction_name(*dir_rows[a].direction)) +
                      " vs " +
                      std::string(netsim::direction_name(*dir_rows[b].direction)) +
                      ": |" + fmt9(dir_rows[a].mean) + " - " +
                      fmt9(dir_rows[b].mean) + "| > 2se " + fmt9(band));
            }
          }
        }
      } else {
        IntStats hops, transmissions;
        BinomialStats success;
        for (std::size_t t = 0; t < cfg.trials; ++t) {
          std::uint64_t ts = trial_seed(cfg.seed, cfg.experiment, point, t);
          auto store = coding::ContentStore::random(m, cfg.payload_bits,
                                                    mix_seed({ts, 1}));
          auto topo = netsim::build_topology(n, cfg.cell_scale, cfg.guard,
                                             mix_seed({ts, 2}));
          auto plan = netsim::plan_local_groups(topo, m, M, cfg.group_scale);
          placement::PlacementConfig pc{scheme, m, M, cfg.independence,
                                        mix_seed({ts, 3})};
          auto caches = placement::place_all_light(pc, n);
          SplitMix64 rng(mix_seed({ts, 4}));
          std::size_t requester = bounded(rng, n);
          auto res = netsim::proactive_gather(topo, plan, caches, store,
                                              requester, scheme,
                                              Mode::AllContents, 0);
          hops.add(res.hops);
          transmissions.add(res.transmissions);
          success.add(res.success);
          log.record(ts, res, n, m, M);
        }
        MetricRow row;
        row.metric = "hops";
        row.scheme = scheme;
        row.routing = Routing::Proactive;
        row.mode = Mode::AllContents;
        row.node_count = n;
        row.content_count = m;
        row.cache_size = M;
        row.mean = hops.mean();
        row.std_error = hops.std_error();
        row.trials = hops.count;
        row.theory = theory;
        row.formula = formula;
        report.rows.push_back(row);

        MetricRow trow = row;
        trow.metric = "transmissions";
        trow.mean = transmissions.mean();
        trow.std_error = transmissions.std_error();
        trow.theory.reset();
        trow.formula.reset();
        report.rows.push_back(trow);

        MetricRow srow = row;
        srow.metric = "success_rate";
        srow.mean = success.mean();
        srow.std_error = success.std_error();
        srow.theory.reset();
        srow.formula.reset();
        report.rows.push_back(srow);
        ++point;
      }
    }
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

// ---------------------------------------------------------------------------
// hit

ExperimentReport run_hit_experiment(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = cfg;
  Checker check{cfg.check, &report.check_failures};

  const std::size_t m = cfg.content_counts.front();
  std::size_t point = 0;

  for (Scheme scheme : cfg.schemes) {
    for (std::size_t M : cfg.cache_sizes) {
      for (std::size_t l : cfg.slot_totals) {
        if (l % M != 0) {
          report.warnings.push_back("hit: skipping l=" + std::to_string(l) +
                                    " (not a multiple of M=" +
                                    std::to_string(M) + ")");
          continue;
        }
        const std::size_t u = l / M;
        BinomialStats hit;
        for (std::size_t t = 0; t < cfg.trials; ++t) {
          std::uint64_t ts = trial_seed(cfg.seed, cfg.experiment, point, t);
          placement::PlacementConfig pc{scheme, m, M, cfg.independence, ts};
          bool ok = false;
          if (scheme == Scheme::Coded) {
            gf2::SpanAccumulator span(m);
            for (std::size_t node = 0; node < u && span.rank() < m; ++node) {
              for (auto& v : placement::draw_slot_vectors(pc, node)) {
                span.add(v);
              }
            }
            ok = span.rank() == m;
          } else {
            std::vector<bool> seen(m, false);
            std::size_t seen_count = 0;
            for (std::size_t node = 0; node < u && seen_count < m; ++node) {
              for (std::size_t idx : placement::draw_slot_indices(pc, node)) {
                if (!seen[idx - 1]) {
                  seen[idx - 1] = true;
                  ++seen_count;
                }
              }
            }
            ok = seen_count == m;
          }
          hit.add(ok);
        }

        double theory = scheme == Scheme::Coded
                            ? analysis::coded_hit_probability(l, m)
                            : analysis::uncoded_hit_probability(m, M, u);
        MetricRow row;
        row.metric = "hit_probability";
        row.scheme = scheme;
        row.content_count = m;
        row.cache_size = M;
        row.slot_total = l;
        row.node_draws = u;
        row.mean = hit.mean();
        row.std_error = hit.std_error();
        row.trials = hit.count;
        row.theory = theory;
        row.formula = scheme == Scheme::Coded ? analysis::FormulaId::CodedHit
                                              : analysis::FormulaId::UncodedHit;
        report.rows.push_back(row);

        double sigma =
            std::sqrt(theory * (1.0 - theory) / static_cast<double>(hit.count));
        check.expect(std::abs(hit.mean() - theory) <= 3.0 * sigma,
                     std::string(coding::scheme_name(scheme)) + " hit l=" +
                         std::to_string(l) + ": " + fmt9(hit.mean()) +
                         " vs theory " + fmt9(theory) + " outside 3 sigma");
        ++point;
      }
    }
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

// ---------------------------------------------------------------------------
// security

ExperimentReport run_security_experiment(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = cfg;
  Checker check{cfg.check, &report.check_failures};
  TrialLog log(cfg.trial_log_path);

  const std::size_t Q = cfg.payload_bits;
  std::size_t point = 0;

  // (a) encoded-bit distribution under skewed sources, per m in the sweep.
  // All Q bits of one draw share the same encoding vector, so the standard
  // error comes from the per-trial one-fractions, not the pooled bits.
  for (std::size_t m : cfg.content_counts) {
    IntStats per_trial_ones;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      std::uint64_t ts = trial_seed(cfg.seed, cfg.experiment, point, t);
      std::vector<double> probs(m, cfg.skew);
      auto store =
          coding::ContentStore::random_skewed(m, Q, probs, mix_seed({ts, 1}));
      SplitMix64 rng(mix_seed({ts, 2}));
      auto vec = coding::draw_encoding_vector(m, rng);
      auto enc = coding::encode(vec, store);
      per_trial_ones.add(enc.payload.count());
    }
    double freq = per_trial_ones.mean() / static_cast<double>(Q);
    double se = per_trial_ones.std_error() / static_cast<double>(Q);
    double theory =
        1.0 - analysis::coded_bit_zero_probability(std::vector<double>(m, cfg.skew));
    MetricRow row;
    row.metric = "encoded_bit_one_freq";
    row.scheme = Scheme::Coded;
    row.content_count = m;
    row.mean = freq;
    row.std_error = se;
    row.trials = cfg.trials;
    row.theory = theory;
    row.formula = analysis::FormulaId::BitZero;
    report.rows.push_back(row);

    check.expect(std::abs(freq - theory) <= 3.0 * se,
                 "encoded bit frequency m=" + std::to_string(m) + ": " +
                     fmt9(freq) + " vs theory " + fmt9(theory) +
                     " outside 3 sigma (se " + fmt9(se) + ")");
    ++point;
  }

  // (b) end-to-end retrievals: decode correctness, key uniqueness
  // (c) last-hop payloads observed without the key
  const std::size_t m = cfg.content_counts.back();
  const std::size_t M = cfg.cache_sizes.front();
  const std::size_t n = cfg.node_count;

  placement::PlacementConfig regime_probe{Scheme::Coded, m, M, cfg.independence,
                                          0};
  const bool regime = regime_probe.secrecy_regime();

  BinomialStats decode_ok;
  IntStats secure_bytes, data_bytes;
  std::map<std::string, std::size_t> key_census;
  std::vector<std::uint64_t> bit_ones(Q, 0);
  std::uint64_t observed = 0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    std::uint64_t ts = trial_seed(cfg.seed, cfg.experiment, point, t);
    auto store = coding::ContentStore::random(m, Q, mix_seed({ts, 1}));
    auto topo =
        netsim::build_topology(n, cfg.cell_scale, cfg.guard, mix_seed({ts, 2}));
    placement::PlacementConfig pc{Scheme::Coded, m, M, cfg.independence,
                                  mix_seed({ts, 3})};
    auto caches = placement::place_all(pc, store, n);
    SplitMix64 rng(mix_seed({ts, 4}));
    std::size_t requester = bounded(rng, n);
    std::size_t target = 1 + bounded(rng, m);
    auto res = netsim::reactive_walk(topo, caches, store, requester,
                                     Direction::RandomAngle, Scheme::Coded,
                                     Mode::SingleContent, target, rng);
    decode_ok.add(res.success);
    secure_bytes.add(res.secure_channel_bytes);
    data_bytes.add(res.data_channel_bytes);
    if (res.key) key_census[res.key->key_payload.to_hex()] += 1;
    if (res.success && res.hops > 0 && res.delivered) {
      for (std::size_t b = 0; b < Q; ++b) {
        if (res.delivered->get(b)) ++bit_ones[b];
      }
      ++observed;
    }
    log.record(ts, res, n, m, M);
  }

  std::uint64_t colliding_pairs = 0;
  for (const auto& [_, c] : key_census) colliding_pairs += c * (c - 1) / 2;
  const double pairs =
      static_cast<double>(cfg.trials) * static_cast<double>(cfg.trials - 1) / 2.0;
  double collision_rate =
      pairs > 0 ? static_cast<double>(colliding_pairs) / pairs : 0.0;

  double freq_sum = 0.0;
  double max_dev = 0.0;
  if (observed > 0) {
    for (std::size_t b = 0; b < Q; ++b) {
      double f = static_cast<double>(bit_ones[b]) / static_cast<double>(observed);
      freq_sum += f;
      max_dev = std::max(max_dev, std::abs(f - 0.5));
    }
  }

  auto push = [&](const std::string& name, double mean,
                  std::optional<double> theory,
                  std::optional<double> se = {}) {
    MetricRow row;
    row.metric = name;
    row.scheme = Scheme::Coded;
    row.node_count = n;
    row.content_count = m;
    row.cache_size = M;
    row.trials = cfg.trials;
    row.mean = mean;
    row.std_error = se;
    row.theory = theory;
    report.rows.push_back(row);
  };
  push("secrecy_regime", regime ? 1.0 : 0.0, {});
  push("decode_success_rate", decode_ok.mean(), 1.0, decode_ok.std_error());
  push("key_collision_rate", collision_rate,
       std::exp2(-static_cast<double>(Q)));
  push("sr_bit_one_freq", observed > 0 ? freq_sum / static_cast<double>(Q) : 0.0,
       0.5);
  push("sr_bit_freq_max_dev", max_dev, {});
  push("secure_bytes_mean", secure_bytes.mean(), {}, secure_bytes.std_error());
  push("data_bytes_mean", data_bytes.mean(), {}, data_bytes.std_error());

  check.expect(decode_ok.mean() == 1.0,
               "decode success rate " + fmt9(decode_ok.mean()) + " expected 1");
  check.expect(colliding_pairs == 0,
               "key collisions: " + std::to_string(colliding_pairs) +
                   " colliding pairs, expected 0");

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

// ---------------------------------------------------------------------------
// update

ExperimentReport run_update_experiment(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = cfg;
  Checker check{cfg.check, &report.check_failures};

  const std::size_t m = cfg.content_counts.front();
  const std::size_t M = cfg.cache_sizes.front();
  const std::size_t n = cfg.node_count;
  const std::size_t Q = cfg.payload_bits;

  auto store = coding::ContentStore::random(m, Q, mix_seed({cfg.seed, 1}));
  auto topo =
      netsim::build_topology(n, cfg.cell_scale, cfg.guard, mix_seed({cfg.seed, 2}));
  placement::PlacementConfig pc{Scheme::Coded, m, M, cfg.independence,
                                mix_seed({cfg.seed, 3})};
  auto caches = placement::place_all(pc, store, n);

  SplitMix64 rng(mix_seed({cfg.seed, 4}));
  const std::size_t replaced = 1 + bounded(rng, m);
  SplitMix64 payload_rng(mix_seed({cfg.seed, 5}));
  const auto new_payload = gf2::BitVector::random(Q, payload_rng);
  const std::uint64_t scramble_seed = mix_seed({cfg.seed, 6});

  // sample distinct requesters
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  SplitMix64 pick(mix_seed({cfg.seed, 7}));
  for (std::size_t j = 0; j < cfg.trials; ++j) {
    std::swap(ids[j], ids[j + bounded(pick, n - j)]);
  }

  struct Recorded {
    std::size_t requester;
    coding::KeyMaterial key;
    std::vector<netsim::RetrievalResult::SlotRef> used;
  };
  std::vector<Recorded> recorded;
  BinomialStats retrieval_ok;
  for (std::size_t j = 0; j < cfg.trials; ++j) {
    SplitMix64 walk_rng(mix_seed({cfg.seed, 8, j}));
    auto res = netsim::reactive_walk(topo, caches, store, ids[j],
                                     Direction::RandomAngle, Scheme::Coded,
                                     Mode::SingleContent, replaced, walk_rng);
    retrieval_ok.add(res.success);
    if (res.success) {
      recorded.push_back(Recorded{ids[j], *res.key, *res.used_slots});
    }
  }

  // snapshot of slots the broadcast must not touch
  std::vector<std::pair<netsim::RetrievalResult::SlotRef, gf2::BitVector>>
      untouched;
  for (const auto& cache : caches) {
    for (std::size_t j = 0; j < cache.slots.size(); ++j) {
      if (!cache.slots[j].vector.get(replaced - 1)) {
        untouched.push_back({{cache.node_id, j}, cache.slots[j].payload});
      }
    }
  }

  auto update = coding::cache_update(caches, store, replaced, new_payload,
                                     scramble_seed);
  const auto& scrambled = store.payload(replaced);

  BinomialStats redecode_ok;
  for (const auto& rec : recorded) {
    gf2::BitVector aggregate(Q);
    for (const auto& ref : rec.used) {
      aggregate ^= caches[ref.node].slots[ref.slot].payload;
    }
    std::vector<gf2::BitVector> own;
    own.reserve(caches[rec.requester].slots.size());
    for (const auto& s : caches[rec.requester].slots) own.push_back(s.payload);
    gf2::BitVector key_now = gf2::xor_combine(own, rec.key.own_gains);
    gf2::BitVector decoded = aggregate ^ key_now;
    bool ok = decoded == scrambled &&
              coding::descramble(decoded, scramble_seed) == new_payload;
    redecode_ok.add(ok);
  }

  bool intact = true;
  for (const auto& [ref, payload] : untouched) {
    if (caches[ref.node].slots[ref.slot].payload != payload) {
      intact = false;
      break;
    }
  }

  double modified_fraction =
      update.slots_total == 0
          ? 0.0
          : static_cast<double>(update.slots_modified) /
                static_cast<double>(update.slots_total);

  auto push = [&](const std::string& name, double mean,
                  std::optional<double> theory,
                  std::optional<double> se = {},
                  std::optional<std::size_t> count = {}) {
    MetricRow row;
    row.metric = name;
    row.scheme = Scheme::Coded;
    row.node_count = n;
    row.content_count = m;
    row.cache_size = M;
    row.trials = count ? count : std::optional<std::size_t>(cfg.trials);
    row.mean = mean;
    row.std_error = se;
    row.theory = theory;
    report.rows.push_back(row);
  };
  push("retrieval_success_rate", retrieval_ok.mean(), 1.0);
  push("redecode_success_rate", redecode_ok.mean(), 1.0, {}, recorded.size());
  push("broadcast_bits", static_cast<double>(update.broadcast_bits),
       static_cast<double>(Q));
  push("modified_slot_fraction", modified_fraction, 0.5,
       std::sqrt(0.25 / static_cast<double>(update.slots_total)),
       update.slots_total);
  push("untouched_intact", intact ? 1.0 : 0.0, 1.0);

  check.expect(retrieval_ok.mean() == 1.0, "pre-update retrievals incomplete");
  check.expect(redecode_ok.count > 0 && redecode_ok.mean() == 1.0,
               "re-decode success rate " + fmt9(redecode_ok.mean()) +
                   " expected 1");
  check.expect(update.broadcast_bits == Q, "broadcast bits != Q");
  double sigma = std::sqrt(0.25 / static_cast<double>(update.slots_total));
  check.expect(std::abs(modified_fraction - 0.5) <= 3.0 * sigma,
               "modified slot fraction " + fmt9(modified_fraction) +
                   " outside 0.5 +- 3 sigma");
  check.expect(intact, "untouched slots changed");

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

// ---------------------------------------------------------------------------
// capacity trend

ExperimentReport run_capacity_trend(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.config = cfg;
  Checker check{cfg.check, &report.check_failures};
  TrialLog log(cfg.trial_log_path);

  const std::size_t n = cfg.node_count;
  const std::size_t M = cfg.cache_sizes.front();
  std::size_t point = 0;

  std::map<Scheme, std::vector<std::pair<std::size_t, double>>> node_means;

  for (Scheme scheme : cfg.schemes) {
    for (std::size_t m : cfg.content_counts) {
      IntStats nodes_used;
      BinomialStats success;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        std::uint64_t ts = trial_seed(cfg.seed, cfg.experiment, point, t);
        auto store = coding::ContentStore::random(m, cfg.payload_bits,
                                                  mix_seed({ts, 1}));
        auto topo = netsim::build_topology(n, cfg.cell_scale, cfg.guard,
                                           mix_seed({ts, 2}));
        placement::PlacementConfig pc{scheme, m, M, cfg.independence,
                                      mix_seed({ts, 3})};
        auto caches = placement::place_all_light(pc, n);
        SplitMix64 rng(mix_seed({ts, 4}));
        std::size_t requester = bounded(rng, n);
        auto res = netsim::reactive_walk(topo, caches, store, requester,
                                         Direction::RandomAngle, scheme,
                                         Mode::AllContents, 0, rng);
        nodes_used.add(res.hops + 1);  // the requester's cache contributes
        success.add(res.success);
        log.record(ts, res, n, m, M);
      }
      node_means[scheme].push_back({m, nodes_used.mean()});

      double theory = scheme == Scheme::Coded
                          ? analysis::expected_nodes_coded(m, M)
                          : analysis::expected_nodes_uncoded(m, M);
      MetricRow row;
      row.metric = "expected_nodes";
      row.scheme = scheme;
      row.routing = Routing::Reactive;
      row.node_count = n;
      row.content_count = m;
      row.cache_size = M;
      row.mean = nodes_used.mean();
      row.std_error = nodes_used.std_error();
      row.trials = nodes_used.count;
      row.theory = theory;
      row.formula = scheme == Scheme::Coded
                        ? analysis::FormulaId::SpanExpectation
                        : analysis::FormulaId::GroupDrawNormalizer;
      report.rows.push_back(row);

      MetricRow srow = row;
      srow.metric = "success_rate";
      srow.mean = success.mean();
      srow.std_error = success.std_error();
      srow.theory.reset();
      srow.formula.reset();
      report.rows.push_back(srow);

      MetricRow thr = row;
      thr.metric = "throughput";
      thr.mean = analysis::throughput_estimate(
          cfg.bandwidth, static_cast<double>(cfg.payload_bits), n,
          nodes_used.mean(), cfg.cell_scale,
          (2.0 + cfg.guard) / cfg.cell_scale);
      thr.std_error.reset();
      thr.theory = analysis::capacity_scaling(scheme, n, m, M);
      thr.formula = scheme == Scheme::Coded
                        ? analysis::FormulaId::CapacityCoded
                        : analysis::FormulaId::CapacityUncoded;
      report.rows.push_back(thr);
      ++point;
    }
  }

  // proactive transmission counts (coded)
  if (std::find(cfg.schemes.begin(), cfg.schemes.end(), Scheme::Coded) !=
      cfg.schemes.end()) {
    for (std::size_t m : cfg.content_counts) {
      IntStats transmissions;
      BinomialStats success;
      double overlay = 0.0;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        std::uint64_t ts = trial_seed(cfg.seed, cfg.experiment, point, t);
        auto store = coding::ContentStore::random(m, cfg.payload_bits,
                                                  mix_seed({ts, 1}));
        auto topo = netsim::build_topology(n, cfg.cell_scale, cfg.guard,
                                           mix_seed({ts, 2}));
        auto plan = netsim::plan_local_groups(topo, m, M, cfg.group_scale);
        if (t == 0) {
          double side_cells =
              static_cast<double>(plan.cells_per_side) * cfg.cell_scale;
          overlay = std::log(static_cast<double>(n)) * side_cells * side_cells;
        }
        placement::PlacementConfig pc{Scheme::Coded, m, M, cfg.independence,
                                      mix_seed({ts, 3})};
        auto caches = placement::place_all_light(pc, n);
        SplitMix64 rng(mix_seed({ts, 4}));
        std::size_t requester = bounded(rng, n);
        auto res = netsim::proactive_gather(topo, plan, caches, store,
                                            requester, Scheme::Coded,
                                            Mode::AllContents, 0);
        transmissions.add(res.transmissions);
        success.add(res.success);
        log.record(ts, res, n, m, M);
      }
      MetricRow row;
      row.metric = "proactive_transmissions";
      row.scheme = Scheme::Coded;
      row.routing = Routing::Proactive;
      row.node_count = n;
      row.content_count = m;
      row.cache_size = M;
      row.mean = transmissions.mean();
      row.std_error = transmissions.std_error();
      row.trials = transmissions.count;
      row.theory = overlay;
      report.rows.push_back(row);

      MetricRow srow = row;
      srow.metric = "proactive_success_rate";
      srow.mean = success.mean();
      srow.std_error = success.std_error();
      srow.theory.reset();
      report.rows.push_back(srow);
      ++point;
    }
  }

  // derived trends
  auto slope_of = [](const std::vector<std::pair<std::size_t, double>>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [m, v] : pts) {
      double x = std::log(static_cast<double>(m));
      double y = std::log(v);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double k = static_cast<double>(pts.size());
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
  };

  for (Scheme scheme : cfg.schemes) {
    const auto& pts = node_means[scheme];
    if (pts.size() < 2) continue;
    double slope = slope_of(pts);
    MetricRow row;
    row.metric = "expected_nodes_loglog_slope";
    row.scheme = scheme;
    row.routing = Routing::Reactive;
    row.node_count = n;
    row.cache_size = M;
    row.mean = slope;
    if (scheme == Scheme::Coded) row.theory = 1.0;
    report.rows.push_back(row);
    if (scheme == Scheme::Coded) {
      check.expect(std::abs(slope - 1.0) <= 0.1,
                   "coded E[N] log-log slope " + fmt9(slope) +
                       " outside 1.0 +- 0.1");
    }
  }

  const auto& coded_pts = node_means[Scheme::Coded];
  const auto& uncoded_pts = node_means[Scheme::Uncoded];
  if (coded_pts.size() == uncoded_pts.size() && coded_pts.size() >= 2) {
    std::vector<double> ratios;
    for (std::size_t i = 0; i < coded_pts.size(); ++i) {
      double ratio = uncoded_pts[i].second / coded_pts[i].second;
      ratios.push_back(ratio);
      MetricRow row;
      row.metric = "hop_ratio_uncoded_over_coded";
      row.node_count = n;
      row.content_count = coded_pts[i].first;
      row.cache_size = M;
      row.mean = ratio;
      row.theory = std::log(static_cast<double>(coded_pts[i].first));
      report.rows.push_back(row);
    }
    double ln0 = std::log(static_cast<double>(coded_pts.front().first));
    for (std::size_t i = 1; i < ratios.size(); ++i) {
      check.expect(ratios[i] > ratios[i - 1],
                   "hop ratio not increasing at m=" +
                       std::to_string(coded_pts[i].first));
      double ln_m = std::log(static_cast<double>(coded_pts[i].first));
      double predicted = ratios.front() * ln_m / ln0;
      check.expect(std::abs(ratios[i] - predicted) <= 0.2 * predicted,
                   "hop ratio at m=" + std::to_string(coded_pts[i].first) +
                       ": " + fmt9(ratios[i]) + " vs ln-m prediction " +
                       fmt9(predicted) + " beyond 20%");
    }
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

ExperimentReport run(const ExperimentConfig& cfg) {
  cfg.validate();
  switch (cfg.experiment) {
    case ExperimentKind::Hops: return run_hop_experiment(cfg);
    case ExperimentKind::Hit: return run_hit_experiment(cfg);
    case ExperimentKind::Security: return run_security_experiment(cfg);
    case ExperimentKind::Update: return run_update_experiment(cfg);
    case ExperimentKind::CapacityTrend: return run_capacity_trend(cfg);
  }
  throw ConfigError("unknown experiment");
}

// ---------------------------------------------------------------------------
// output

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace

void write_csv(const ExperimentReport& report, std::ostream& out) {
  const auto& cfg = report.config;
  out << "# experiment=" << experiment_name(cfg.experiment) << '\n';
  out << "# n=" << cfg.node_count << " m=" << join_sizes(cfg.content_counts)
      << " Q=" << cfg.payload_bits << " M=" << join_sizes(cfg.cache_sizes);
  if (!cfg.slot_totals.empty()) out << " l=" << join_sizes(cfg.slot_totals);
  out << '\n';
  out << "# trials=" << cfg.trials << " seed=" << cfg.seed << '\n';
  out << "# schemes=";
  for (std::size_t i = 0; i < cfg.schemes.size(); ++i) {
    if (i) out << ',';
    out << coding::scheme_name(cfg.schemes[i]);
  }
  out << " routing=" << netsim::routing_name(cfg.routing) << " directions=";
  for (std::size_t i = 0; i < cfg.directions.size(); ++i) {
    if (i) out << ',';
    out << netsim::direction_name(cfg.directions[i]);
  }
  out << " independence=" << (cfg.independence ? 1 : 0) << '\n';
  out << "# c1=" << fmt9(cfg.cell_scale) << " delta=" << fmt9(cfg.guard)
      << " c4=" << fmt9(cfg.group_scale) << " W=" << fmt9(cfg.bandwidth)
      << " skew=" << fmt9(cfg.skew) << '\n';
  out << "# keystream=" << coding::keystream_id() << '\n';
  out << "experiment,metric,scheme,routing,mode,direction,n,m,M,l,u,mean,"
         "stderr,trials,theory,formula_id\n";
  for (const auto& row : report.rows) {
    out << experiment_name(cfg.experiment) << ',' << row.metric << ',';
    if (row.scheme) out << coding::scheme_name(*row.scheme);
    out << ',';
    if (row.routing) out << netsim::routing_name(*row.routing);
    out << ',';
    if (row.mode) out << netsim::mode_name(*row.mode);
    out << ',';
    if (row.direction) out << netsim::direction_name(*row.direction);
    out << ',';
    if (row.node_count) out << *row.node_count;
    out << ',';
    if (row.content_count) out << *row.content_count;
    out << ',';
    if (row.cache_size) out << *row.cache_size;
    out << ',';
    if (row.slot_total) out << *row.slot_total;
    out << ',';
    if (row.node_draws) out << *row.node_draws;
    out << ',' << fmt9(row.mean) << ',';
    if (row.std_error) out << fmt9(*row.std_error);
    out << ',';
    if (row.trials) out << *row.trials;
    out << ',';
    if (row.theory) out << fmt9(*row.theory);
    out << ',';
    if (row.formula) out << analysis::formula_name(*row.formula);
    out << '\n';
  }
}

void write_gnuplot(const ExperimentReport& report, const std::string& csv_path,
                   std::ostream& out) {
  const auto& cfg = report.config;
  out << "# gnuplot script generated alongside " << csv_path << "\n";
  out << "set datafile separator ','\n";
  out << "set key left top\n";
  switch (cfg.experiment) {
    case ExperimentKind::Hops:
      out << "set xlabel 'cache size M'\nset ylabel 'mean hops'\n";
      out << "plot \"< grep ',hops,coded,' " << csv_path
          << "\" using 9:12 with points title 'coded', \\\n"
          << "     \"< grep ',hops,uncoded,' " << csv_path
          << "\" using 9:12 with points title 'uncoded', \\\n"
          << "     \"< grep ',hops,coded,' " << csv_path
          << "\" using 9:15 with lines title 'coded theory', \\\n"
          << "     \"< grep ',hops,uncoded,' " << csv_path
          << "\" using 9:15 with lines title 'uncoded theory'\n";
      break;
    case ExperimentKind::Hit:
      out << "set xlabel 'cached slots l'\nset ylabel 'hit probability'\n";
      out << "plot \"< grep ',hit_probability,coded,' " << csv_path
          << "\" using 10:12 with points title 'coded', \\\n"
          << "     \"< grep ',hit_probability,uncoded,' " << csv_path
          << "\" using 10:12 with points title 'uncoded', \\\n"
          << "     \"< grep ',hit_probability,coded,' " << csv_path
          << "\" using 10:15 with lines title 'coded theory', \\\n"
          << "     \"< grep ',hit_probability,uncoded,' " << csv_path
          << "\" using 10:15 with lines title 'uncoded theory'\n";
      break;
    case ExperimentKind::CapacityTrend:
      out << "set logscale xy\nset xlabel 'contents m'\nset ylabel 'E[N]'\n";
      out << "plot \"< grep ',expected_nodes,coded,' " << csv_path
          << "\" using 8:12 with linespoints title 'coded', \\\n"
          << "     \"< grep ',expected_nodes,uncoded,' " << csv_path
          << "\" using 8:12 with linespoints title 'uncoded'\n";
      break;
    default:
      out << "# no default plot for this experiment; see the CSV columns\n";
      break;
  }
}

}  // namespace ccsim::experiments
