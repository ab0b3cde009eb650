#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ccsim/errors.hpp"
#include "ccsim/experiments.hpp"

namespace {

using ccsim::ConfigError;
using ccsim::experiments::ExperimentConfig;
using ccsim::experiments::ExperimentKind;

const std::map<std::string, ccsim::coding::Scheme>& scheme_names() {
  static const std::map<std::string, ccsim::coding::Scheme> names{
      {"coded", ccsim::coding::Scheme::Coded},
      {"uncoded", ccsim::coding::Scheme::Uncoded}};
  return names;
}

const std::map<std::string, ccsim::netsim::Routing>& routing_names() {
  static const std::map<std::string, ccsim::netsim::Routing> names{
      {"reactive", ccsim::netsim::Routing::Reactive},
      {"proactive", ccsim::netsim::Routing::Proactive}};
  return names;
}

const std::map<std::string, ccsim::netsim::Direction>& direction_names() {
  static const std::map<std::string, ccsim::netsim::Direction> names{
      {"E", ccsim::netsim::Direction::East},
      {"W", ccsim::netsim::Direction::West},
      {"S", ccsim::netsim::Direction::South},
      {"N", ccsim::netsim::Direction::North}};
  return names;
}

ExperimentConfig defaults_for(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  switch (kind) {
    case ExperimentKind::Hops:
      break;  // n=1000, m=100, M=25, 500 trials
    case ExperimentKind::Hit:
      cfg.cache_sizes = {25};
      cfg.slot_totals = {50, 100, 125, 150, 200, 300, 400};
      cfg.trials = 1000;
      break;
    case ExperimentKind::Security:
      cfg.node_count = 300;
      cfg.content_counts = {1, 2, 4, 8, 16, 64};
      cfg.cache_sizes = {8};
      cfg.payload_bits = 128;
      cfg.trials = 1000;
      cfg.schemes = {ccsim::coding::Scheme::Coded};
      break;
    case ExperimentKind::Update:
      cfg.node_count = 200;
      cfg.content_counts = {32};
      cfg.cache_sizes = {8};
      cfg.trials = 100;
      cfg.schemes = {ccsim::coding::Scheme::Coded};
      break;
    case ExperimentKind::CapacityTrend:
      cfg.node_count = 20000;
      cfg.content_counts = {32, 64, 128, 256};
      cfg.cache_sizes = {8};
      cfg.trials = 100;
      break;
  }
  return cfg;
}

struct SubState {
  ExperimentConfig cfg;
  std::string config_path;
  CLI::App* app = nullptr;
};

void attach_options(CLI::App* sub, SubState& state) {
  auto& cfg = state.cfg;
  sub->add_option("--config", state.config_path,
                  "key=value config file; command-line flags override it");
  sub->add_option("--n", cfg.node_count, "number of nodes");
  sub->add_option("--m", cfg.content_counts, "content count(s)")->delimiter(',');
  sub->add_option("--M", cfg.cache_sizes, "cache slots per node (repeatable)")
      ->delimiter(',');
  sub->add_option("--l", cfg.slot_totals, "cached-slot totals (repeatable)")
      ->delimiter(',');
  sub->add_option("--Q", cfg.payload_bits, "bits per content");
  sub->add_option("--trials", cfg.trials, "trials per point");
  sub->add_option("--seed", cfg.seed, "master seed");
  sub->add_option("--scheme", cfg.schemes, "caching scheme(s)")
      ->delimiter(',')
      ->transform(CLI::CheckedTransformer(scheme_names()));
  sub->add_option("--routing", cfg.routing, "routing strategy")
      ->transform(CLI::CheckedTransformer(routing_names()));
  sub->add_option("--direction", cfg.directions, "walk direction(s)")
      ->delimiter(',')
      ->transform(CLI::CheckedTransformer(direction_names()));
  sub->add_flag("--independence", cfg.independence,
                "reject linearly dependent slot vectors per node");
  sub->add_option("--c1", cfg.cell_scale, "square-let side constant");
  sub->add_option("--delta", cfg.guard, "protocol-model guard constant");
  sub->add_option("--c4", cfg.group_scale, "local-group side constant");
  sub->add_option("--W", cfg.bandwidth, "total bandwidth");
  sub->add_option("--skew", cfg.skew, "bit-one probability of skewed sources");
  sub->add_option("--out", cfg.output_path, "CSV output path (default stdout)");
  sub->add_option("--trial-log", cfg.trial_log_path, "per-trial CSV log path");
  sub->add_option("--gnuplot", cfg.gnuplot_path, "write a gnuplot script here");
  sub->add_flag("--check", cfg.check,
                "verify built-in thresholds; exit 3 on failure");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  return parts;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw ConfigError("config file: bad integer for " + key + ": " + value);
  }
}

std::vector<std::size_t> parse_sizes(const std::string& key,
                                     const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& part : split_list(value)) out.push_back(parse_size(key, part));
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    return std::stod(value);
  } catch (const std::exception&) {
    throw ConfigError("config file: bad number for " + key + ": " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw ConfigError("config file: bad boolean for " + key + ": " + value);
}

template <typename T>
T parse_name(const std::string& key, const std::string& value,
             const std::map<std::string, T>& names) {
  auto it = names.find(value);
  if (it == names.end()) {
    throw ConfigError("config file: bad value for " + key + ": " + value);
  }
  return it->second;
}

// Applies one config-file entry unless the same flag appeared on the
// command line.
void apply_entry(SubState& state, const std::string& key,
                 const std::string& value) {
  if (state.app->count("--" + key) > 0) return;
  auto& cfg = state.cfg;
  if (key == "n") {
    cfg.node_count = parse_size(key, value);
  } else if (key == "m") {
    cfg.content_counts = parse_sizes(key, value);
  } else if (key == "M") {
    cfg.cache_sizes = parse_sizes(key, value);
  } else if (key == "l") {
    cfg.slot_totals = parse_sizes(key, value);
  } else if (key == "Q") {
    cfg.payload_bits = parse_size(key, value);
  } else if (key == "trials") {
    cfg.trials = parse_size(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_size(key, value);
  } else if (key == "scheme") {
    cfg.schemes.clear();
    for (const auto& part : split_list(value)) {
      cfg.schemes.push_back(parse_name(key, part, scheme_names()));
    }
  } else if (key == "routing") {
    cfg.routing = parse_name(key, value, routing_names());
  } else if (key == "direction") {
    cfg.directions.clear();
    for (const auto& part : split_list(value)) {
      cfg.directions.push_back(parse_name(key, part, direction_names()));
    }
  } else if (key == "independence") {
    cfg.independence = parse_bool(key, value);
  } else if (key == "c1") {
    cfg.cell_scale = parse_real(key, value);
  } else if (key == "delta") {
    cfg.guard = parse_real(key, value);
  } else if (key == "c4") {
    cfg.group_scale = parse_real(key, value);
  } else if (key == "W") {
    cfg.bandwidth = parse_real(key, value);
  } else if (key == "skew") {
    cfg.skew = parse_real(key, value);
  } else if (key == "out") {
    cfg.output_path = value;
  } else if (key == "trial-log") {
    cfg.trial_log_path = value;
  } else if (key == "gnuplot") {
    cfg.gnuplot_path = value;
  } else if (key == "check") {
    cfg.check = parse_bool(key, value);
  } else {
    throw ConfigError("config file: unknown key: " + key);
  }
}

void load_config_file(SubState& state) {
  if (state.config_path.empty()) return;
  std::ifstream in(state.config_path);
  if (!in) throw ConfigError("cannot open config file: " + state.config_path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos || line[start] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config file line " + std::to_string(lineno) +
                        ": expected key=value");
    }
    std::string key = line.substr(start, eq - start);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string value = line.substr(eq + 1);
    std::size_t vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? "" : value.substr(vstart);
    value.erase(value.find_last_not_of(" \t") + 1);
    apply_entry(state, key, value);
  }
}

int emit(const ccsim::experiments::ExperimentReport& report) {
  const auto& cfg = report.config;
  if (cfg.output_path.empty()) {
    ccsim::experiments::write_csv(report, std::cout);
  } else {
    std::ofstream out(cfg.output_path);
    if (!out) {
      std::cerr << "error: cannot open " << cfg.output_path << "\n";
      return 2;
    }
    ccsim::experiments::write_csv(report, out);
  }
  if (!cfg.gnuplot_path.empty()) {
    std::ofstream gp(cfg.gnuplot_path);
    if (!gp) {
      std::cerr << "error: cannot open " << cfg.gnuplot_path << "\n";
      return 2;
    }
    ccsim::experiments::write_gnuplot(
        report, cfg.output_path.empty() ? "out.csv" : cfg.output_path, gp);
  }

  std::ostream& info = cfg.output_path.empty() ? std::cerr : std::cout;
  for (const auto& w : report.warnings) info << "warning: " << w << "\n";
  info << ccsim::experiments::experiment_name(cfg.experiment) << ": "
       << report.rows.size() << " aggregate rows in " << report.wall_seconds
       << " s\n";
  if (cfg.check) {
    if (report.check_failures.empty()) {
      info << "check: all thresholds met\n";
    } else {
      for (const auto& f : report.check_failures) {
        info << "check failed: " << f << "\n";
      }
      return 3;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for decentralized coded caching in wireless ad hoc "
               "networks"};
  app.require_subcommand(1);

  struct Sub {
    ExperimentKind kind;
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {ExperimentKind::Hops, "hops",
       "mean hops to retrieve all contents by reactive walks"},
      {ExperimentKind::Hit, "hit", "cache hit probability vs cached slots"},
      {ExperimentKind::Security, "security",
       "encoded-bit uniformity, decode correctness, key uniqueness"},
      {ExperimentKind::Update, "update",
       "broadcast cache update with gain reuse"},
      {ExperimentKind::CapacityTrend, "capacity-trend",
       "E[N] and throughput trends over m"},
  };

  std::map<std::string, SubState> states;
  for (const auto& s : subs) {
    auto& state = states[s.name];
    state.cfg = defaults_for(s.kind);
    state.app = app.add_subcommand(s.name, s.help);
    attach_options(state.app, state);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    auto& state = states[name];
    load_config_file(state);
    auto report = ccsim::experiments::run(state.cfg);
    return emit(report);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
