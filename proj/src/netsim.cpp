#include "ccsim/netsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace ccsim::netsim {

double connectivity_scale(std::size_t node_count) {
  const double n = static_cast<double>(node_count);
  return std::sqrt(std::log(n) / n);
}

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::East: return "E";
    case Direction::West: return "W";
    case Direction::South: return "S";
    case Direction::North: return "N";
    case Direction::RandomAngle: return "random";
  }
  return "?";
}

std::string_view mode_name(Mode m) {
  return m == Mode::SingleContent ? "single" : "all";
}

std::string_view routing_name(Routing r) {
  return r == Routing::Reactive ? "reactive" : "proactive";
}

Topology build_topology(std::size_t node_count, double cell_scale,
                        double guard, std::uint64_t seed) {
  if (node_count < 2) throw std::invalid_argument("build_topology: n >= 2");
  if (cell_scale <= 0) throw std::invalid_argument("build_topology: c1 > 0");
  if (guard < 0) throw std::invalid_argument("build_topology: delta >= 0");

  Topology topo;
  topo.node_count = node_count;
  topo.cell_scale = cell_scale;
  topo.guard = guard;
  topo.base_scale = connectivity_scale(node_count);
  topo.cell_side = cell_scale * topo.base_scale;
  topo.grid_dim = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(1.0 / topo.cell_side)));

  SplitMix64 pos_rng(mix_seed({seed, 0x706f73}));
  topo.positions.reserve(node_count);
  for (std::size_t i = 0; i < node_count; ++i) {
    topo.positions.push_back(Point{unit_real(pos_rng), unit_real(pos_rng)});
  }

  topo.nodes_in_cell.assign(topo.grid_dim * topo.grid_dim, {});
  topo.cell_of_node.resize(node_count);
  const double dim = static_cast<double>(topo.grid_dim);
  for (std::size_t i = 0; i < node_count; ++i) {
    auto cx = std::min<std::size_t>(
        topo.grid_dim - 1,
        static_cast<std::size_t>(topo.positions[i].x * dim));
    auto cy = std::min<std::size_t>(
        topo.grid_dim - 1,
        static_cast<std::size_t>(topo.positions[i].y * dim));
    std::size_t cell = topo.cell_index(cx, cy);
    topo.cell_of_node[i] = cell;
    topo.nodes_in_cell[cell].push_back(i);  // ids arrive in ascending order
  }

  SplitMix64 anchor_rng(mix_seed({seed, 0x616e63}));
  topo.anchor_of_cell.assign(topo.grid_dim * topo.grid_dim, Topology::npos);
  for (std::size_t cell = 0; cell < topo.nodes_in_cell.size(); ++cell) {
    const auto& nodes = topo.nodes_in_cell[cell];
    if (!nodes.empty()) {
      topo.anchor_of_cell[cell] = nodes[bounded(anchor_rng, nodes.size())];
    }
  }
  return topo;
}

LocalGroupPlan plan_local_groups(const Topology& topology, std::size_t m,
                                 std::size_t M, double group_scale) {
  if (m < 1 || M < 1) throw std::invalid_argument("plan_local_groups: m, M >= 1");
  if (group_scale <= 0) throw std::invalid_argument("plan_local_groups: c4 > 0");

  LocalGroupPlan plan;
  plan.target_side =
      group_scale * std::sqrt(static_cast<double>(m) /
                              (static_cast<double>(topology.node_count) *
                               static_cast<double>(M)));
  double cells = plan.target_side / topology.cell_side;
  plan.cells_per_side = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(cells - 1e-12)));
  plan.cells_per_side = std::min(plan.cells_per_side, topology.grid_dim);
  plan.groups_per_axis =
      std::max<std::size_t>(1, topology.grid_dim / plan.cells_per_side);
  plan.spans_network = plan.groups_per_axis == 1;

  plan.group_of_cell.resize(topology.grid_dim * topology.grid_dim);
  plan.cells_in_group.assign(plan.groups_per_axis * plan.groups_per_axis, {});
  for (std::size_t cy = 0; cy < topology.grid_dim; ++cy) {
    std::size_t gy = std::min(cy / plan.cells_per_side, plan.groups_per_axis - 1);
    for (std::size_t cx = 0; cx < topology.grid_dim; ++cx) {
      std::size_t gx = std::min(cx / plan.cells_per_side, plan.groups_per_axis - 1);
      std::size_t cell = topology.cell_index(cx, cy);
      std::size_t group = gy * plan.groups_per_axis + gx;
      plan.group_of_cell[cell] = group;
      plan.cells_in_group[group].push_back(cell);
    }
  }
  return plan;
}

namespace {

Direction quantize_angle(SplitMix64& rng) {
  double theta = unit_real(rng) * 2.0 * std::numbers::pi;
  double c = std::cos(theta);
  double s = std::sin(theta);
  if (std::abs(c) >= std::abs(s)) {
    return c >= 0 ? Direction::East : Direction::West;
  }
  return s >= 0 ? Direction::North : Direction::South;
}

std::size_t wrap_step(std::size_t base, std::size_t step, std::size_t dim,
                      bool forward) {
  step %= dim;
  return forward ? (base + step) % dim : (base + dim - step) % dim;
}

std::size_t index_bits(std::size_t m) {
  return std::max<std::size_t>(1, std::bit_width(m));
}

// Secure-channel traffic: slot vectors out plus decoding gains back for
// coded caches; index advertisements for uncoded ones.
std::size_t secure_bytes(coding::Scheme scheme, std::size_t contributors,
                         std::size_t m, std::size_t M) {
  std::size_t bits = scheme == coding::Scheme::Coded
                         ? contributors * M * (m + 1)
                         : contributors * M * index_bits(m);
  return (bits + 7) / 8;
}

struct GatherState {
  // coded
  gf2::SpanAccumulator span;
  std::vector<gf2::BitVector> vectors;   // visited slots in visit order
  std::vector<gf2::BitVector> payloads;
  std::vector<RetrievalResult::SlotRef> refs;
  // uncoded
  std::vector<bool> seen;
  std::size_t seen_count = 0;
  const coding::NodeCache* holder = nullptr;  // first cache with the target

  explicit GatherState(std::size_t m) : span(m), seen(m, false) {}

  void add_indices(const coding::NodeCache& cache, std::size_t target) {
    for (const auto& slot : cache.plain_slots) {
      if (!seen[slot.index - 1]) {
        seen[slot.index - 1] = true;
        ++seen_count;
      }
      if (target != 0 && slot.index == target && holder == nullptr) {
        holder = &cache;
      }
    }
  }

  void add_vectors(const coding::NodeCache& cache) {
    for (std::size_t j = 0; j < cache.slots.size(); ++j) {
      span.add(cache.slots[j].vector);
      vectors.push_back(cache.slots[j].vector);
      payloads.push_back(cache.slots[j].payload);
      refs.push_back({cache.node_id, j});
    }
  }
};

// Assembles the aggregate the network delivers for a spanned request
// vector, decodes it with the key and checks against the store.
bool finish_single_coded(GatherState& state, const coding::KeyMaterial& key,
                         const coding::ContentStore& store, std::size_t target,
                         RetrievalResult& result) {
  gf2::BitMatrix mat(key.request_vector.size());
  for (auto& v : state.vectors) mat.append_row(v);
  auto gains = gf2::solve(mat, key.request_vector);
  if (!gains) return false;
  gf2::BitVector aggregate = gf2::xor_combine(state.payloads, *gains);
  gf2::BitVector decoded = coding::decode_last_hop(aggregate, key);
  if (decoded != store.payload(target)) return false;
  std::vector<RetrievalResult::SlotRef> used;
  for (std::size_t i = 0; i < state.refs.size(); ++i) {
    if (gains->get(i)) used.push_back(state.refs[i]);
  }
  result.used_slots = std::move(used);
  result.delivered = std::move(aggregate);
  result.decoded = std::move(decoded);
  return true;
}

bool finish_single_uncoded(const GatherState& state,
                           const coding::ContentStore& store,
                           std::size_t target, RetrievalResult& result) {
  if (state.holder == nullptr) return false;
  for (const auto& slot : state.holder->plain_slots) {
    if (slot.index == target) {
      if (slot.payload != store.payload(target)) return false;
      result.delivered = slot.payload;
      result.decoded = slot.payload;
      return true;
    }
  }
  return false;
}

}  // namespace

RetrievalResult reactive_walk(const Topology& topology,
                              std::span<const coding::NodeCache> caches,
                              const coding::ContentStore& store,
                              std::size_t requester, Direction direction,
                              coding::Scheme scheme, Mode mode,
                              std::size_t target, SplitMix64& rng) {
  if (caches.size() != topology.node_count) {
    throw std::invalid_argument("reactive_walk: caches not placed for all nodes");
  }
  if (requester >= topology.node_count) {
    throw std::invalid_argument("reactive_walk: requester out of range");
  }
  const std::size_t m = store.content_count();
  if (mode == Mode::SingleContent && (target < 1 || target > m)) {
    throw std::invalid_argument("reactive_walk: target required for single mode");
  }

  RetrievalResult result;
  result.scheme = scheme;
  result.routing = Routing::Reactive;
  result.mode = mode;
  Direction dir =
      direction == Direction::RandomAngle ? quantize_angle(rng) : direction;
  result.direction = dir;

  const std::size_t M = caches[requester].slot_count();
  GatherState state(m);
  coding::KeyMaterial key;

  bool done = false;
  if (scheme == coding::Scheme::Coded) {
    if (mode == Mode::AllContents) {
      for (const auto& slot : caches[requester].slots) {
        state.span.add(slot.vector);
      }
      done = state.span.rank() == m;
    } else {
      key = coding::build_key(caches[requester], target);
      result.key = key;
      if (key.request_vector.none()) {
        // own cache alone reconstructs the content; nothing travels
        gf2::BitVector decoded =
            coding::decode_last_hop(gf2::BitVector(store.payload_bits()), key);
        done = decoded == store.payload(target);
        result.decoded = std::move(decoded);
        result.delivered = gf2::BitVector(store.payload_bits());
        result.used_slots = std::vector<RetrievalResult::SlotRef>{};
      }
    }
  } else {
    state.add_indices(caches[requester], mode == Mode::SingleContent ? target : 0);
    done = mode == Mode::AllContents ? state.seen_count == m
                                     : state.holder != nullptr;
  }

  if (!done) {
    const bool horizontal =
        dir == Direction::East || dir == Direction::West;
    const bool forward = dir == Direction::East || dir == Direction::North;
    const std::size_t start = topology.cell_of_node[requester];
    const std::size_t sx = topology.cell_x(start);
    const std::size_t sy = topology.cell_y(start);

    for (std::size_t step = 0; step < topology.grid_dim && !done; ++step) {
      std::size_t cx = horizontal ? wrap_step(sx, step, topology.grid_dim, forward) : sx;
      std::size_t cy = horizontal ? sy : wrap_step(sy, step, topology.grid_dim, forward);
      for (std::size_t node : topology.nodes_in_cell[topology.cell_index(cx, cy)]) {
        if (node == requester) continue;
        ++result.hops;
        const auto& cache = caches[node];
        if (scheme == coding::Scheme::Coded) {
          if (mode == Mode::AllContents) {
            for (const auto& slot : cache.slots) state.span.add(slot.vector);
            done = state.span.rank() == m;
          } else {
            state.add_vectors(cache);
            done = state.span.contains(key.request_vector);
          }
        } else {
          state.add_indices(cache, mode == Mode::SingleContent ? target : 0);
          done = mode == Mode::AllContents ? state.seen_count == m
                                           : state.holder != nullptr;
        }
        if (done) break;
      }
    }
  }

  bool success = done;
  if (success && mode == Mode::SingleContent && !result.decoded) {
    success = scheme == coding::Scheme::Coded
                  ? finish_single_coded(state, key, store, target, result)
                  : finish_single_uncoded(state, store, target, result);
  }

  result.success = success;
  result.transmissions = result.hops;
  result.data_channel_bytes = result.hops * (store.payload_bits() / 8);
  result.secure_channel_bytes = secure_bytes(scheme, result.hops, m, M);
  return result;
}

RetrievalResult proactive_gather(const Topology& topology,
                                 const LocalGroupPlan& plan,
                                 std::span<const coding::NodeCache> caches,
                                 const coding::ContentStore& store,
                                 std::size_t requester, coding::Scheme scheme,
                                 Mode mode, std::size_t target) {
  if (caches.size() != topology.node_count) {
    throw std::invalid_argument("proactive_gather: caches not placed for all nodes");
  }
  if (requester >= topology.node_count) {
    throw std::invalid_argument("proactive_gather: requester out of range");
  }
  const std::size_t m = store.content_count();
  if (mode == Mode::SingleContent && (target < 1 || target > m)) {
    throw std::invalid_argument("proactive_gather: target required for single mode");
  }

  RetrievalResult result;
  result.scheme = scheme;
  result.routing = Routing::Proactive;
  result.mode = mode;

  const std::size_t M = caches[requester].slot_count();
  const std::size_t home = topology.cell_of_node[requester];
  const auto& cells = plan.cells_in_group[plan.group_of_cell[home]];

  GatherState state(m);
  coding::KeyMaterial key;
  if (scheme == coding::Scheme::Coded && mode == Mode::SingleContent) {
    key = coding::build_key(caches[requester], target);
    result.key = key;
  }

  // group bounds in cell coordinates
  std::size_t min_x = topology.grid_dim, max_x = 0;
  std::size_t min_y = topology.grid_dim, max_y = 0;
  std::size_t contributors = 0;
  std::size_t uplinks = 0;
  for (std::size_t cell : cells) {
    min_x = std::min(min_x, topology.cell_x(cell));
    max_x = std::max(max_x, topology.cell_x(cell));
    min_y = std::min(min_y, topology.cell_y(cell));
    max_y = std::max(max_y, topology.cell_y(cell));
    std::size_t anchor = topology.anchor_of_cell[cell];
    for (std::size_t node : topology.nodes_in_cell[cell]) {
      if (node == requester) continue;
      ++contributors;
      if (node != anchor) ++uplinks;
      const auto& cache = caches[node];
      if (scheme == coding::Scheme::Coded) {
        state.add_vectors(cache);
      } else {
        state.add_indices(cache, mode == Mode::SingleContent ? target : 0);
      }
    }
  }

  bool success = false;
  if (scheme == coding::Scheme::Coded) {
    if (mode == Mode::AllContents) {
      gf2::SpanAccumulator all(m);
      for (const auto& slot : caches[requester].slots) all.add(slot.vector);
      for (const auto& v : state.vectors) all.add(v);
      success = all.rank() == m;
    } else if (key.request_vector.none()) {
      gf2::BitVector decoded =
          coding::decode_last_hop(gf2::BitVector(store.payload_bits()), key);
      success = decoded == store.payload(target);
      result.decoded = std::move(decoded);
      result.delivered = gf2::BitVector(store.payload_bits());
      result.used_slots = std::vector<RetrievalResult::SlotRef>{};
    } else {
      success = finish_single_coded(state, key, store, target, result);
    }
  } else {
    state.add_indices(caches[requester], 0);
    if (mode == Mode::AllContents) {
      success = state.seen_count == m;
    } else {
      if (state.holder == nullptr && caches[requester].holds_index(target)) {
        // served locally; still verified below against the store
        state.holder = &caches[requester];
      }
      success = finish_single_uncoded(state, store, target, result);
    }
  }

  std::size_t relays = 0;
  if (contributors > 0) {
    std::size_t width = max_x - min_x + 1;
    std::size_t height = max_y - min_y + 1;
    relays = height * (width - 1) + (height - 1);
    if (topology.anchor_of_cell[home] != requester) ++relays;
  }

  result.hops = contributors;
  result.transmissions = uplinks + relays;
  result.success = success;
  result.data_channel_bytes = result.transmissions * (store.payload_bits() / 8);
  result.secure_channel_bytes = secure_bytes(scheme, contributors, m, M);
  return result;
}

void write_trial_log_header(std::ostream& out) {
  out << "seed,scheme,routing,mode,direction,n,m,M,hops,transmissions,"
         "success,secure_bytes,data_bytes\n";
}

void write_trial_log_row(std::ostream& out, std::uint64_t seed,
                         const RetrievalResult& result, std::size_t node_count,
                         std::size_t m, std::size_t M) {
  out << seed << ',' << coding::scheme_name(result.scheme) << ','
      << routing_name(result.routing) << ',' << mode_name(result.mode) << ',';
  if (result.direction) out << direction_name(*result.direction);
  out << ',' << node_count << ',' << m << ',' << M << ',' << result.hops << ','
      << result.transmissions << ',' << (result.success ? 1 : 0) << ','
      << result.secure_channel_bytes << ',' << result.data_channel_bytes
      << '\n';
}

}  // namespace ccsim::netsim
