#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ccsim/coding.hpp"

namespace ccsim::netsim {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// sqrt(ln(n)/n): the square-let scale that keeps Theta(log n) nodes per cell.
double connectivity_scale(std::size_t node_count);

// Nodes on the unit square, bucketed into a grid of square-lets, one
// randomly chosen anchor per nonempty square-let. The grid has
// ceil(1 / (cell_scale * connectivity_scale(n))) cells per axis; node
// binning stretches the cells to tile the square exactly (side 1/grid_dim)
// so no ring of cells is a boundary sliver. cell_side keeps the nominal
// square-let side used when snapping local groups.
struct Topology {
  std::size_t node_count = 0;
  double cell_scale = 1.0;  // c1
  double guard = 1.0;       // protocol-model guard constant
  std::vector<Point> positions;
  double base_scale = 0.0;  // connectivity_scale(n)
  double cell_side = 0.0;   // nominal: cell_scale * base_scale
  std::size_t grid_dim = 0;  // cells per axis
  std::vector<std::size_t> cell_of_node;
  std::vector<std::vector<std::size_t>> nodes_in_cell;  // ascending node ids
  std::vector<std::size_t> anchor_of_cell;  // npos for empty cells

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  // Interference spacing (2 + guard) / cell_scale in cell units.
  double spacing() const { return (2.0 + guard) / cell_scale; }
  std::size_t cell_index(std::size_t cx, std::size_t cy) const {
    return cy * grid_dim + cx;
  }
  std::size_t cell_x(std::size_t cell) const { return cell % grid_dim; }
  std::size_t cell_y(std::size_t cell) const { return cell / grid_dim; }
};

Topology build_topology(std::size_t node_count, double cell_scale,
                        double guard, std::uint64_t seed);

// Partition of the square-let grid into square local groups whose side is
// the snapped version of group_scale * sqrt(m / (n M)). The grid is split
// into floor(grid_dim / side) groups per axis; leftover cells join the last
// group so no group is smaller than planned.
struct LocalGroupPlan {
  double target_side = 0.0;       // before snapping
  std::size_t cells_per_side = 1; // snapped
  std::size_t groups_per_axis = 1;
  bool spans_network = false;     // single degenerate group
  std::vector<std::size_t> group_of_cell;
  std::vector<std::vector<std::size_t>> cells_in_group;
};

LocalGroupPlan plan_local_groups(const Topology& topology, std::size_t m,
                                 std::size_t M, double group_scale);

enum class Direction { East, West, South, North, RandomAngle };
enum class Mode { SingleContent, AllContents };
enum class Routing { Reactive, Proactive };

std::string_view direction_name(Direction d);
std::string_view mode_name(Mode m);
std::string_view routing_name(Routing r);

// Per-request record. hops counts distinct contributing nodes other than
// the requester; transmissions equals hops for reactive walks and the
// uplink-plus-relay count for proactive gathering. A true success has been
// verified bit-exactly against the ground-truth store whenever a single
// content was decoded.
struct RetrievalResult {
  coding::Scheme scheme = coding::Scheme::Coded;
  Routing routing = Routing::Reactive;
  Mode mode = Mode::AllContents;
  std::optional<Direction> direction;  // resolved; empty for proactive
  std::size_t hops = 0;
  std::size_t transmissions = 0;
  bool success = false;
  std::size_t secure_channel_bytes = 0;
  std::size_t data_channel_bytes = 0;
  // Populated on single-content success: the aggregate handed to the
  // requester and the payload recovered from it.
  std::optional<gf2::BitVector> delivered;
  std::optional<gf2::BitVector> decoded;
  // Coded single-content bookkeeping so callers can replay the decode with
  // the same gains later (cache-update verification).
  struct SlotRef {
    std::size_t node = 0;
    std::size_t slot = 0;
  };
  std::optional<coding::KeyMaterial> key;
  std::optional<std::vector<SlotRef>> used_slots;  // slots with gain 1
};

// Walks square-let by square-let in the chosen direction (toroidal wrap at
// the boundary), visiting nodes in ascending id order, until the stop
// criterion for (scheme, mode) is met or the ring is exhausted.
// RandomAngle quantizes a uniform angle to the nearest axis direction.
RetrievalResult reactive_walk(const Topology& topology,
                              std::span<const coding::NodeCache> caches,
                              const coding::ContentStore& store,
                              std::size_t requester, Direction direction,
                              coding::Scheme scheme, Mode mode,
                              std::size_t target, SplitMix64& rng);

// Gathers from every node in the requester's local group. Transmission
// count: one uplink per non-anchor contributing node, plus anchor relays
// along horizontal-then-vertical square-let chains toward the requester.
RetrievalResult proactive_gather(const Topology& topology,
                                 const LocalGroupPlan& plan,
                                 std::span<const coding::NodeCache> caches,
                                 const coding::ContentStore& store,
                                 std::size_t requester, coding::Scheme scheme,
                                 Mode mode, std::size_t target);

// Per-trial CSV log.
void write_trial_log_header(std::ostream& out);
void write_trial_log_row(std::ostream& out, std::uint64_t seed,
                         const RetrievalResult& result, std::size_t node_count,
                         std::size_t m, std::size_t M);

}  // namespace ccsim::netsim
