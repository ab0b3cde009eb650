#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <sstream>

#include "ccsim/analysis.hpp"
#include "ccsim/netsim.hpp"
#include "ccsim/placement.hpp"

using namespace ccsim;
using coding::Scheme;
using netsim::Direction;
using netsim::Mode;
using placement::PlacementConfig;

TEST_CASE("topology geometry at n=1000") {
  auto topo = netsim::build_topology(1000, 1.0, 1.0, 17);
  CHECK(topo.base_scale == doctest::Approx(0.0831120).epsilon(1e-4));
  CHECK(topo.grid_dim == 13);
  CHECK(topo.spacing() == doctest::Approx(3.0));

  auto again = netsim::build_topology(1000, 1.0, 1.0, 17);
  CHECK(topo.positions[500].x == again.positions[500].x);
  CHECK(topo.cell_of_node == again.cell_of_node);
  CHECK(topo.anchor_of_cell == again.anchor_of_cell);

  std::size_t bucketed = 0;
  for (const auto& cell : topo.nodes_in_cell) bucketed += cell.size();
  CHECK(bucketed == 1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto& p = topo.positions[i];
    CHECK(p.x >= 0.0);
    CHECK(p.x < 1.0);
    std::size_t cx = topo.cell_x(topo.cell_of_node[i]);
    CHECK(cx == std::min<std::size_t>(12, std::size_t(p.x * topo.grid_dim)));
  }
  for (std::size_t cell = 0; cell < topo.anchor_of_cell.size(); ++cell) {
    std::size_t anchor = topo.anchor_of_cell[cell];
    if (anchor != netsim::Topology::npos) {
      CHECK(topo.cell_of_node[anchor] == cell);
    }
  }
  CHECK_THROWS_AS(netsim::build_topology(1, 1.0, 1.0, 1),
                  std::invalid_argument);
}

TEST_CASE("square-lets hold about log(n) nodes") {
  // cells tile the square exactly, so the per-cell mean is n/grid^2; the
  // ceil in the grid dimension compresses it below n * (c1 s)^2 = log(n)
  // by at most (grid*s - 1)^2 worth of area
  for (std::size_t n : {1000u, 20000u}) {
    auto topo = netsim::build_topology(n, 1.0, 1.0, 77);
    double cells = double(topo.grid_dim) * double(topo.grid_dim);
    double mean = double(n) / cells;
    double nominal = std::log(double(n));
    CHECK(mean / nominal > 0.8);
    CHECK(mean / nominal <= 1.05);

    double node_sum = 0.0;
    for (const auto& cell : topo.nodes_in_cell) node_sum += cell.size();
    CHECK(node_sum == double(n));
  }
}

TEST_CASE("local group planning snaps to whole square-lets") {
  auto topo = netsim::build_topology(1000, 1.0, 1.0, 3);
  auto plan = netsim::plan_local_groups(topo, 100, 4, 1.0);
  CHECK(plan.target_side == doctest::Approx(0.1581139).epsilon(1e-5));
  CHECK(plan.cells_per_side == 2);
  CHECK(plan.groups_per_axis == 6);
  CHECK_FALSE(plan.spans_network);

  // tiling: every cell in exactly one group
  std::size_t assigned = 0;
  for (const auto& cells : plan.cells_in_group) assigned += cells.size();
  CHECK(assigned == topo.grid_dim * topo.grid_dim);
  for (std::size_t cell = 0; cell < plan.group_of_cell.size(); ++cell) {
    const auto& members = plan.cells_in_group[plan.group_of_cell[cell]];
    CHECK(std::find(members.begin(), members.end(), cell) != members.end());
  }

  // m = M gives the smallest groups
  auto small = netsim::plan_local_groups(topo, 4, 4, 1.0);
  CHECK(small.target_side == doctest::Approx(1.0 / std::sqrt(1000.0)).epsilon(1e-9));
  CHECK(small.cells_per_side == 1);

  // oversized target collapses to a single flagged group
  auto whole = netsim::plan_local_groups(topo, 100, 4, 20.0);
  CHECK(whole.spans_network);
  CHECK(whole.groups_per_axis == 1);
}

TEST_CASE("group node counts scale like m/M") {
  const std::size_t n = 2000, m = 100, M = 4;
  double total_nodes = 0;
  double total_groups = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto topo = netsim::build_topology(n, 1.0, 1.0, seed);
    auto plan = netsim::plan_local_groups(topo, m, M, 1.0);
    for (const auto& cells : plan.cells_in_group) {
      for (auto cell : cells) total_nodes += topo.nodes_in_cell[cell].size();
      ++total_groups;
    }
  }
  double mean = total_nodes / total_groups;
  double target = double(m) / double(M);
  // snapped-up group sides overshoot the target; this is a Theta claim
  CHECK(mean > 0.6 * target);
  CHECK(mean < 2.5 * target);
}

TEST_CASE("self-sufficient requester walks zero hops") {
  const std::size_t m = 8;
  auto store = coding::ContentStore::random(m, 64, 5);
  auto topo = netsim::build_topology(50, 1.0, 1.0, 6);
  PlacementConfig cfg{Scheme::Coded, m, m, true, 7};
  auto caches = placement::place_all(cfg, store, 50);
  SplitMix64 rng(8);
  auto res = netsim::reactive_walk(topo, caches, store, 3, Direction::East,
                                   Scheme::Coded, Mode::AllContents, 0, rng);
  CHECK(res.success);
  CHECK(res.hops == 0);
  CHECK(res.data_channel_bytes == 0);

  auto single = netsim::reactive_walk(topo, caches, store, 3, Direction::West,
                                      Scheme::Coded, Mode::SingleContent, 5, rng);
  CHECK(single.success);
  CHECK(single.hops == 0);
  REQUIRE(single.decoded.has_value());
  CHECK(*single.decoded == store.payload(5));
}

TEST_CASE("uncoded immediate hit costs one hop") {
  const std::size_t n = 40, m = 4;
  auto store = coding::ContentStore::random(m, 64, 9);
  auto topo = netsim::build_topology(n, 1.0, 1.0, 10);
  // every node caches content 2 except the requester, which holds content 1
  std::vector<coding::NodeCache> caches(n);
  for (std::size_t i = 0; i < n; ++i) {
    caches[i].node_id = i;
    caches[i].scheme = Scheme::Uncoded;
    std::size_t idx = i == 7 ? 1 : 2;
    caches[i].plain_slots.push_back(coding::Content{idx, store.payload(idx)});
  }
  SplitMix64 rng(11);
  auto res = netsim::reactive_walk(topo, caches, store, 7, Direction::North,
                                   Scheme::Uncoded, Mode::SingleContent, 2, rng);
  CHECK(res.success);
  CHECK(res.hops == 1);
  REQUIRE(res.decoded.has_value());
  CHECK(*res.decoded == store.payload(2));
}

TEST_CASE("exhausted ring reports failure with every ring node visited") {
  const std::size_t n = 60, m = 4;
  auto store = coding::ContentStore::random(m, 64, 12);
  auto topo = netsim::build_topology(n, 1.0, 1.0, 13);
  std::vector<coding::NodeCache> caches(n);
  for (std::size_t i = 0; i < n; ++i) {
    caches[i].node_id = i;
    caches[i].scheme = Scheme::Uncoded;
    caches[i].plain_slots.push_back(coding::Content{1, store.payload(1)});
  }
  const std::size_t requester = 0;
  SplitMix64 rng(14);
  auto res = netsim::reactive_walk(topo, caches, store, requester,
                                   Direction::East, Scheme::Uncoded,
                                   Mode::SingleContent, 3, rng);
  CHECK_FALSE(res.success);

  std::size_t row = topo.cell_y(topo.cell_of_node[requester]);
  std::size_t ring_nodes = 0;
  for (std::size_t cx = 0; cx < topo.grid_dim; ++cx) {
    ring_nodes += topo.nodes_in_cell[topo.cell_index(cx, row)].size();
  }
  CHECK(res.hops == ring_nodes - 1);
}

TEST_CASE("random angle quantizes to the four axis directions") {
  SplitMix64 rng(15);
  auto store = coding::ContentStore::random(4, 64, 16);
  auto topo = netsim::build_topology(30, 1.0, 1.0, 17);
  PlacementConfig cfg{Scheme::Coded, 4, 4, true, 18};
  auto caches = placement::place_all(cfg, store, 30);
  std::map<Direction, int> seen;
  for (int t = 0; t < 2000; ++t) {
    auto res = netsim::reactive_walk(topo, caches, store, 0,
                                     Direction::RandomAngle, Scheme::Coded,
                                     Mode::AllContents, 0, rng);
    REQUIRE(res.direction.has_value());
    ++seen[*res.direction];
  }
  CHECK(seen.size() == 4);
  for (const auto& [d, c] : seen) {
    CHECK(c / 2000.0 == doctest::Approx(0.25).epsilon(0.2));
  }
}

TEST_CASE("coded all-contents walks at n=1000 m=100 M=25") {
  const std::size_t n = 1000, m = 100, M = 25;
  std::uint64_t hops_sum = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    std::uint64_t seed = mix_seed({900, std::uint64_t(t)});
    auto store = coding::ContentStore::random(m, 64, mix_seed({seed, 1}));
    auto topo = netsim::build_topology(n, 1.0, 1.0, mix_seed({seed, 2}));
    PlacementConfig cfg{Scheme::Coded, m, M, false, mix_seed({seed, 3})};
    auto caches = placement::place_all_light(cfg, n);
    SplitMix64 rng(mix_seed({seed, 4}));
    std::size_t requester = bounded(rng, n);
    auto res = netsim::reactive_walk(topo, caches, store, requester,
                                     Direction::RandomAngle, Scheme::Coded,
                                     Mode::AllContents, 0, rng);
    REQUIRE(res.success);
    hops_sum += res.hops;

    // each node adds at most M dimensions
    gf2::SpanAccumulator own(m);
    for (const auto& s : caches[requester].slots) own.add(s.vector);
    std::size_t missing = m - own.rank();
    CHECK(res.hops >= (missing + M - 1) / M);

    // byte accounting identities
    CHECK(res.data_channel_bytes == res.hops * (64 / 8));
    CHECK(res.secure_channel_bytes == (res.hops * M * (m + 1) + 7) / 8);
  }
  double mean = hops_sum / double(trials);
  CHECK(mean < 5.0);
  CHECK(mean > 3.0);
}

TEST_CASE("single-content walks decode correctly for both schemes") {
  SplitMix64 rng(19);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 150, m = 16, M = 4;
    auto store = coding::ContentStore::random(m, 64, rng());
    auto topo = netsim::build_topology(n, 1.0, 1.0, rng());
    for (Scheme scheme : {Scheme::Coded, Scheme::Uncoded}) {
      PlacementConfig cfg{scheme, m, M, false, rng()};
      auto caches = placement::place_all(cfg, store, n);
      std::size_t requester = bounded(rng, n);
      std::size_t target = 1 + bounded(rng, m);
      auto res = netsim::reactive_walk(topo, caches, store, requester,
                                       Direction::RandomAngle, scheme,
                                       Mode::SingleContent, target, rng);
      if (res.success) {
        REQUIRE(res.decoded.has_value());
        CHECK(*res.decoded == store.payload(target));
        if (scheme == Scheme::Coded) {
          REQUIRE(res.key.has_value());
          REQUIRE(res.used_slots.has_value());
          // replaying the recorded gains reproduces the decode
          gf2::BitVector aggregate(64);
          for (const auto& ref : *res.used_slots) {
            aggregate ^= caches[ref.node].slots[ref.slot].payload;
          }
          CHECK((aggregate ^ res.key->key_payload) == store.payload(target));
        }
      }
    }
  }
}

TEST_CASE("direction choice does not change coded hop counts") {
  const std::size_t n = 1000, m = 100;
  const int trials = 300;
  const Direction dirs[] = {Direction::East, Direction::West, Direction::South,
                            Direction::North};
  for (std::size_t M : {10u, 25u, 50u}) {
    double means[4], ses[4];
    for (int d = 0; d < 4; ++d) {
      std::uint64_t sum = 0, sum_sq = 0;
      for (int t = 0; t < trials; ++t) {
        std::uint64_t seed = mix_seed({3003, M, std::uint64_t(d), std::uint64_t(t)});
        auto store = coding::ContentStore::random(m, 64, mix_seed({seed, 1}));
        auto topo = netsim::build_topology(n, 1.0, 1.0, mix_seed({seed, 2}));
        PlacementConfig cfg{Scheme::Coded, m, M, false, mix_seed({seed, 3})};
        auto caches = placement::place_all_light(cfg, n);
        SplitMix64 rng(mix_seed({seed, 4}));
        std::size_t requester = bounded(rng, n);
        auto res = netsim::reactive_walk(topo, caches, store, requester, dirs[d],
                                         Scheme::Coded, Mode::AllContents, 0, rng);
        REQUIRE(res.success);
        sum += res.hops;
        sum_sq += res.hops * res.hops;
      }
      means[d] = sum / double(trials);
      double var = (sum_sq - trials * means[d] * means[d]) / (trials - 1.0);
      ses[d] = std::sqrt(var / trials);
    }
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) {
        double band = 2.0 * std::hypot(ses[a], ses[b]);
        CHECK(std::abs(means[a] - means[b]) <= band);
      }
    }
  }
}

TEST_CASE("degenerate proactive group: requester alone") {
  const std::size_t m = 4;
  auto store = coding::ContentStore::random(m, 64, 23);
  // two far-apart nodes so each sits alone in its own group
  netsim::Topology topo = netsim::build_topology(2, 0.2, 1.0, 24);
  topo.positions = {{0.05, 0.05}, {0.95, 0.95}};
  topo.nodes_in_cell.assign(topo.grid_dim * topo.grid_dim, {});
  for (std::size_t i = 0; i < 2; ++i) {
    auto cx = std::min<std::size_t>(
        topo.grid_dim - 1, std::size_t(topo.positions[i].x * topo.grid_dim));
    auto cy = std::min<std::size_t>(
        topo.grid_dim - 1, std::size_t(topo.positions[i].y * topo.grid_dim));
    topo.cell_of_node[i] = topo.cell_index(cx, cy);
    topo.nodes_in_cell[topo.cell_of_node[i]].push_back(i);
  }
  topo.anchor_of_cell.assign(topo.grid_dim * topo.grid_dim, netsim::Topology::npos);
  for (std::size_t i = 0; i < 2; ++i) {
    topo.anchor_of_cell[topo.cell_of_node[i]] = i;
  }

  auto plan = netsim::plan_local_groups(topo, m, m, 0.05);
  REQUIRE(plan.cells_per_side == 1);
  PlacementConfig cfg{Scheme::Coded, m, m, true, 25};
  auto caches = placement::place_all(cfg, store, 2);
  auto res = netsim::proactive_gather(topo, plan, caches, store, 0,
                                      Scheme::Coded, Mode::AllContents, 0);
  CHECK(res.transmissions == 0);
  CHECK(res.hops == 0);
  CHECK(res.success);  // independence with M=m makes the node self-sufficient
}

TEST_CASE("proactive groups sized with margin succeed and decode") {
  const std::size_t n = 2000, m = 64, M = 8;
  const double c4 = std::sqrt(2.0);
  int trials = 500, ok = 0;
  for (int t = 0; t < trials; ++t) {
    std::uint64_t seed = mix_seed({4000, std::uint64_t(t)});
    auto store = coding::ContentStore::random(m, 64, mix_seed({seed, 1}));
    auto topo = netsim::build_topology(n, 1.0, 1.0, mix_seed({seed, 2}));
    auto plan = netsim::plan_local_groups(topo, m, M, c4);
    PlacementConfig cfg{Scheme::Coded, m, M, false, mix_seed({seed, 3})};
    auto caches = placement::place_all_light(cfg, n);
    SplitMix64 rng(mix_seed({seed, 4}));
    auto res = netsim::proactive_gather(topo, plan, caches, store,
                                        bounded(rng, n), Scheme::Coded,
                                        Mode::AllContents, 0);
    if (res.success) ++ok;
  }
  CHECK(ok / double(trials) >= 0.99);

  // single-content decode through the anchor aggregation path
  auto store = coding::ContentStore::random(m, 64, 41);
  auto topo = netsim::build_topology(n, 1.0, 1.0, 42);
  auto plan = netsim::plan_local_groups(topo, m, M, c4);
  PlacementConfig cfg{Scheme::Coded, m, M, false, 43};
  auto caches = placement::place_all(cfg, store, n);
  auto res = netsim::proactive_gather(topo, plan, caches, store, 17,
                                      Scheme::Coded, Mode::SingleContent, 9);
  REQUIRE(res.success);
  CHECK(*res.decoded == store.payload(9));
  CHECK(res.data_channel_bytes == res.transmissions * 8);
}

TEST_CASE("proactive transmissions track log(n) times the group cell count") {
  const std::size_t m = 64, M = 8;
  const double c4 = std::sqrt(2.0);
  std::vector<double> ratios;
  for (std::size_t n : {500u, 1000u, 2000u}) {
    double sum = 0;
    const int trials = 150;
    double predictor = 0;
    for (int t = 0; t < trials; ++t) {
      std::uint64_t seed = mix_seed({5000, n, std::uint64_t(t)});
      auto store = coding::ContentStore::random(m, 64, mix_seed({seed, 1}));
      auto topo = netsim::build_topology(n, 1.0, 1.0, mix_seed({seed, 2}));
      auto plan = netsim::plan_local_groups(topo, m, M, c4);
      predictor = std::log(double(n)) * double(plan.cells_per_side) *
                  double(plan.cells_per_side);
      PlacementConfig cfg{Scheme::Coded, m, M, false, mix_seed({seed, 3})};
      auto caches = placement::place_all_light(cfg, n);
      SplitMix64 rng(mix_seed({seed, 4}));
      auto res = netsim::proactive_gather(topo, plan, caches, store,
                                          bounded(rng, n), Scheme::Coded,
                                          Mode::AllContents, 0);
      sum += res.transmissions;
    }
    ratios.push_back(sum / trials / predictor);
  }
  for (double r : ratios) {
    CHECK(r > 0.5);
    CHECK(r < 2.0);
  }
  double lo = *std::min_element(ratios.begin(), ratios.end());
  double hi = *std::max_element(ratios.begin(), ratios.end());
  CHECK(hi / lo < 1.4);
}

TEST_CASE("trial log format") {
  std::ostringstream out;
  netsim::write_trial_log_header(out);
  netsim::RetrievalResult res;
  res.scheme = Scheme::Coded;
  res.routing = netsim::Routing::Reactive;
  res.mode = Mode::AllContents;
  res.direction = Direction::East;
  res.hops = 4;
  res.transmissions = 4;
  res.success = true;
  res.secure_channel_bytes = 1263;
  res.data_channel_bytes = 512;
  netsim::write_trial_log_row(out, 99, res, 1000, 100, 25);
  CHECK(out.str() ==
        "seed,scheme,routing,mode,direction,n,m,M,hops,transmissions,"
        "success,secure_bytes,data_bytes\n"
        "99,coded,reactive,all,E,1000,100,25,4,4,1,1263,512\n");
}
