#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ccsim/analysis.hpp"
#include "ccsim/netsim.hpp"

namespace ccsim::experiments {

enum class ExperimentKind { Hops, Hit, Security, Update, CapacityTrend };

std::string_view experiment_name(ExperimentKind k);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Hops;
  std::size_t node_count = 1000;               // --n
  std::vector<std::size_t> content_counts{100};  // --m (capacity/security sweep)
  std::size_t payload_bits = 1024;             // --Q
  std::vector<std::size_t> cache_sizes{25};    // --M
  std::vector<std::size_t> slot_totals;        // --l (hit experiment)
  std::size_t trials = 500;
  std::uint64_t seed = 1;
  std::vector<coding::Scheme> schemes{coding::Scheme::Coded,
                                      coding::Scheme::Uncoded};
  netsim::Routing routing = netsim::Routing::Reactive;
  std::vector<netsim::Direction> directions{
      netsim::Direction::East, netsim::Direction::West,
      netsim::Direction::South, netsim::Direction::North};
  bool independence = false;
  double cell_scale = 1.0;   // --c1
  double guard = 1.0;        // --delta
  double group_scale = 1.0;  // --c4
  double bandwidth = 1.0;    // --W
  double skew = 0.9;         // bit-one probability for skewed sources
  std::string output_path;     // --out; empty writes CSV to stdout
  std::string trial_log_path;  // --trial-log
  std::string gnuplot_path;    // --gnuplot
  bool check = false;

  void validate() const;  // throws ConfigError
};

// One aggregate CSV row.
struct MetricRow {
  std::string metric;
  std::optional<coding::Scheme> scheme;
  std::optional<netsim::Routing> routing;
  std::optional<netsim::Mode> mode;
  std::optional<netsim::Direction> direction;
  std::optional<std::size_t> node_count;
  std::optional<std::size_t> content_count;  // m
  std::optional<std::size_t> cache_size;     // M
  std::optional<std::size_t> slot_total;     // l
  std::optional<std::size_t> node_draws;     // u
  double mean = 0.0;
  std::optional<double> std_error;
  std::optional<std::size_t> trials;
  std::optional<double> theory;
  std::optional<analysis::FormulaId> formula;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<MetricRow> rows;
  std::vector<std::string> warnings;
  std::vector<std::string> check_failures;  // populated when config.check
  double wall_seconds = 0.0;

  const MetricRow* find(const std::string& metric,
                        std::optional<coding::Scheme> scheme = {},
                        std::optional<std::size_t> m = {},
                        std::optional<std::size_t> M = {},
                        std::optional<std::size_t> l = {},
                        std::optional<netsim::Direction> dir = {}) const;
};

ExperimentReport run_hop_experiment(const ExperimentConfig& config);
ExperimentReport run_hit_experiment(const ExperimentConfig& config);
ExperimentReport run_security_experiment(const ExperimentConfig& config);
ExperimentReport run_update_experiment(const ExperimentConfig& config);
ExperimentReport run_capacity_trend(const ExperimentConfig& config);
ExperimentReport run(const ExperimentConfig& config);

// Deterministic CSV: '#' config-echo lines, a header row, then one row per
// aggregate with floats at 9 significant digits.
void write_csv(const ExperimentReport& report, std::ostream& out);
void write_gnuplot(const ExperimentReport& report, const std::string& csv_path,
                   std::ostream& out);

// Per-trial seed derivation shared by all experiments.
std::uint64_t trial_seed(std::uint64_t master, ExperimentKind kind,
                         std::size_t point_index, std::size_t trial_index);

}  // namespace ccsim::experiments
