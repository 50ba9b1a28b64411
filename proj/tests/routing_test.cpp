#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "wsdo/error.hpp"
#include "wsdo/rng.hpp"
#include "wsdo/routing.hpp"

using namespace wsdo;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Random obstacle grid assembled by hand, independent of the layout code.
RouteGraph obstacle_grid(int nx, int ny, double blocked_share, Rng& rng) {
  RouteGraph g;
  g.cell_size = 1.0;
  g.nx = nx;
  g.ny = ny;
  g.cell_to_node.assign(static_cast<std::size_t>(nx * ny), -1);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      if (rng.uniform() < blocked_share) continue;
      g.cell_to_node[static_cast<std::size_t>(y * nx + x)] = static_cast<int>(g.adj.size());
      g.cell_x.push_back(x);
      g.cell_y.push_back(y);
      g.aisle.push_back(-1);
      g.adj.emplace_back();
    }
  for (std::size_t u = 0; u < g.adj.size(); ++u)
    for (auto [dx, dy] : {std::pair{0, -1}, {-1, 0}, {1, 0}, {0, 1}}) {
      const int v = g.node_at(g.cell_x[u] + dx, g.cell_y[u] + dy);
      if (v >= 0) g.adj[u].push_back({v, 1.0});
    }
  return g;
}

std::vector<double> bellman_ford(const RouteGraph& g, int source) {
  std::vector<double> dist(g.node_count(), kInf);
  dist[static_cast<std::size_t>(source)] = 0.0;
  for (std::size_t round = 0; round + 1 < g.node_count(); ++round) {
    bool changed = false;
    for (std::size_t u = 0; u < g.node_count(); ++u) {
      if (!std::isfinite(dist[u])) continue;
      for (const Edge& e : g.adj[u])
        if (dist[u] + e.weight < dist[static_cast<std::size_t>(e.to)]) {
          dist[static_cast<std::size_t>(e.to)] = dist[u] + e.weight;
          changed = true;
        }
    }
    if (!changed) break;
  }
  return dist;
}

Layout empty_floor(double w, double d) {
  Layout l;
  l.floor_width = w;
  l.floor_depth = d;
  l.depot = {0, 0};
  return l;
}

struct Fixture {
  Instance inst = generate_instance(42, GenParams{});
  RouteGraph graph = build_route_graph(inst.layout, inst.params.cell_size);
  std::vector<SlotId> slots = all_slots(inst.layout);

  std::vector<SlotId> random_picks(Rng& rng, std::size_t n) const {
    std::vector<SlotId> pool = slots;
    rng.shuffle(pool);
    pool.resize(n);
    return pool;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

// Exhaustive oracle over all visiting orders, summing legs left to right.
double brute_force_tour(const RouteGraph& g, int depot, const std::vector<SlotId>& picks) {
  std::vector<int> stops;
  for (const SlotId s : picks) stops.push_back(g.pick_node_of(s));
  std::vector<std::vector<double>> d(stops.size() + 1, std::vector<double>(stops.size() + 1));
  std::vector<int> all{depot};
  all.insert(all.end(), stops.begin(), stops.end());
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = 0; j < all.size(); ++j) d[i][j] = shortest_path(g, all[i], all[j]).distance;
  std::vector<std::size_t> perm(stops.size());
  std::iota(perm.begin(), perm.end(), 1);
  double best = kInf;
  do {
    double c = 0.0;
    std::size_t prev = 0;
    for (std::size_t s : perm) {
      c += d[prev][s];
      prev = s;
    }
    c += d[prev][0];
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double path_weight(const RouteGraph& g, const std::vector<int>& path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto& edges = g.adj[static_cast<std::size_t>(path[i - 1])];
    auto it = std::find_if(edges.begin(), edges.end(),
                           [&](const Edge& e) { return e.to == path[i]; });
    REQUIRE(it != edges.end());
    total += it->weight;
  }
  return total;
}

void all_shortest_paths(const RouteGraph& g, const std::vector<double>& to_b, int u, int b,
                        std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (u == b) {
    out.push_back(cur);
    return;
  }
  for (const Edge& e : g.adj[static_cast<std::size_t>(u)])
    if (to_b[static_cast<std::size_t>(e.to)] + e.weight == to_b[static_cast<std::size_t>(u)]) {
      cur.push_back(e.to);
      all_shortest_paths(g, to_b, e.to, b, cur, out);
      cur.pop_back();
    }
}

} // namespace

TEST_CASE("shortest path identity and Manhattan distance") {
  const RouteGraph g = build_route_graph(empty_floor(5, 5), 1.0);
  const int a = g.node_at(0, 0), b = g.node_at(4, 4);
  const auto self = shortest_path(g, a, a);
  CHECK(self.distance == 0.0);
  CHECK(self.path == std::vector<int>{a});
  const auto r = shortest_path(g, a, b);
  CHECK(r.distance == 8.0);
  CHECK(r.path.front() == a);
  CHECK(r.path.back() == b);
  CHECK(path_weight(g, r.path) == r.distance);
}

TEST_CASE("dijkstra matches the Bellman-Ford oracle on random obstacle grids") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int nx = 5 + static_cast<int>(rng.below(16));
    const int ny = 5 + static_cast<int>(rng.below(16));
    const RouteGraph g = obstacle_grid(nx, ny, 0.25, rng);
    REQUIRE(g.node_count() <= 400);
    if (g.node_count() < 2) continue;
    for (int q = 0; q < 5; ++q) {
      const int a = static_cast<int>(rng.below(g.node_count()));
      const auto oracle = bellman_ford(g, a);
      const auto fast = dijkstra_distances(g, a);
      CHECK(fast == oracle);
      const int b = static_cast<int>(rng.below(g.node_count()));
      if (std::isfinite(oracle[static_cast<std::size_t>(b)])) {
        const auto p = shortest_path(g, a, b);
        CHECK(p.distance == oracle[static_cast<std::size_t>(b)]);
        CHECK(path_weight(g, p.path) == p.distance);
      } else {
        CHECK_THROWS_AS(shortest_path(g, a, b), UnreachableError);
      }
    }
  }
}

TEST_CASE("ties resolve to the lexicographically smallest node sequence") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const RouteGraph g = obstacle_grid(5, 5, 0.15, rng);
    if (g.node_count() < 2) continue;
    const int a = static_cast<int>(rng.below(g.node_count()));
    const int b = static_cast<int>(rng.below(g.node_count()));
    const auto to_b = bellman_ford(g, b);
    if (!std::isfinite(to_b[static_cast<std::size_t>(a)])) continue;
    std::vector<std::vector<int>> paths;
    std::vector<int> cur{a};
    all_shortest_paths(g, to_b, a, b, cur, paths);
    CHECK(shortest_path(g, a, b).path == *std::min_element(paths.begin(), paths.end()));
  }
}

TEST_CASE("shortest path distances satisfy the triangle inequality") {
  const auto& f = fixture();
  Rng rng(5);
  DistanceCache cache(f.graph);
  for (int i = 0; i < 200; ++i) {
    const int a = static_cast<int>(rng.below(f.graph.node_count()));
    const int b = static_cast<int>(rng.below(f.graph.node_count()));
    const int c = static_cast<int>(rng.below(f.graph.node_count()));
    CHECK(cache.distance(a, c) <= cache.distance(a, b) + cache.distance(b, c));
  }
}

TEST_CASE("single pick goes out and back") {
  const auto& f = fixture();
  const SlotId s{2, 17};
  const Route r = optimize_pick_sequence(f.graph, f.graph.depot_node, {s});
  const double leg = shortest_path(f.graph, f.graph.depot_node, f.graph.pick_node_of(s)).distance;
  CHECK(r.total_distance == 2.0 * leg);
  CHECK(r.path.front() == f.graph.depot_node);
  CHECK(r.path.back() == f.graph.depot_node);
  CHECK(r.aisle_pick_counts.at(2) == 1);
}

TEST_CASE("four-pick routes equal the permutation oracle") {
  const auto& f = fixture();
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    const auto picks = f.random_picks(rng, 4);
    const Route r = optimize_pick_sequence(f.graph, f.graph.depot_node, picks);
    CHECK(r.total_distance == brute_force_tour(f.graph, f.graph.depot_node, picks));
    CHECK(path_weight(f.graph, r.path) == r.total_distance);
    CHECK(r.visits.size() == 4);
  }
}

TEST_CASE("heuristic mode never loses to the given order") {
  const auto& f = fixture();
  Rng rng(30);
  DistanceCache cache(f.graph);
  for (int t = 0; t < 5; ++t) {
    const auto picks = f.random_picks(rng, 30);
    const Route opt = optimize_pick_sequence(f.graph, f.graph.depot_node, picks, {}, &cache);
    const Route given = route_in_given_order(f.graph, f.graph.depot_node, picks, &cache);
    CHECK(opt.total_distance <= given.total_distance);
    CHECK(opt.visits.size() == 30);
    CHECK(path_weight(f.graph, opt.path) == opt.total_distance);
  }
  const auto picks = f.random_picks(rng, 30);
  const Route a = optimize_pick_sequence(f.graph, f.graph.depot_node, picks);
  const Route b = optimize_pick_sequence(f.graph, f.graph.depot_node, picks);
  CHECK(a.path == b.path);
}

TEST_CASE("duplicate picks are visited once") {
  const auto& f = fixture();
  const Route r = optimize_pick_sequence(f.graph, f.graph.depot_node, {{0, 1}, {1, 3}, {0, 1}});
  CHECK(r.visits.size() == 2);
}

TEST_CASE("unreachable picks are reported") {
  RouteGraph g;
  g.cell_size = 1.0;
  g.nx = 3;
  g.ny = 1;
  g.cell_to_node = {0, -1, 1};
  g.cell_x = {0, 2};
  g.cell_y = {0, 0};
  g.aisle = {0, 0};
  g.adj = {{}, {}};
  g.slot_pick[{0, 0}] = 1;
  g.pick_node = {1};
  g.depot_node = 0;
  CHECK_THROWS_AS(optimize_pick_sequence(g, 0, {{0, 0}}), UnreachableError);
  CHECK_THROWS_AS(optimize_pick_sequence(g, 0, {}), InvalidArgument);
}

TEST_CASE("picking frequency examples") {
  SimParams params;
  params.picker_speed = 1.0;
  params.handle_time = 5.0;
  CHECK(picking_frequency({}, params).rate.empty());
  CHECK(picking_frequency({}, params).mean_vector(3) == std::vector<double>(3, 0.0));

  Route r;
  r.total_distance = 100.0;
  r.visits.assign(10, SlotId{1, 0});
  r.aisle_pick_counts[2] = 10;
  // 100 m at 1 m/s plus 10 picks at 5 s = 150 s; 10 picks / (150/3600 h).
  const double expected = 10.0 / (150.0 / 3600.0);
  CHECK(expected == doctest::Approx(240.0));
  const auto pf = picking_frequency({r}, params);
  CHECK(pf.rate.at(2) == doctest::Approx(expected));
  CHECK(pf.mean.at(2) == pf.rate.at(2));

  SimParams slower = params;
  slower.handle_time *= 2;
  CHECK(picking_frequency({r}, slower).rate.at(2) < pf.rate.at(2));

  // Homogeneity: distances and speed scaled together leave rates unchanged.
  Route scaled = r;
  scaled.total_distance *= 3.0;
  SimParams fast = params;
  fast.picker_speed *= 3.0;
  CHECK(picking_frequency({scaled}, fast).rate.at(2) == doctest::Approx(pf.rate.at(2)));
}

TEST_CASE("route aisle bookkeeping") {
  const auto& f = fixture();
  const Route r = optimize_pick_sequence(f.graph, f.graph.depot_node, {{0, 3}, {3, 40}});
  CHECK(r.aisle_pick_counts.at(0) == 1);
  CHECK(r.aisle_pick_counts.at(3) == 1);
  CHECK(r.aisle_traversal_counts.at(3) >= 1);
}
