#include "wsdo/routing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>

#include "wsdo/error.hpp"

namespace wsdo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_node(const RouteGraph& g, int n) {
  if (n < 0 || static_cast<std::size_t>(n) >= g.node_count())
    throw InvalidArgument("node " + std::to_string(n) + " is not in the graph");
}

// Greedy walk down a distance tree rooted at b, always taking the smallest
// neighbour id that stays on a shortest path.
std::vector<int> walk_tree(const RouteGraph& g, const std::vector<double>& to_b, int a, int b) {
  std::vector<int> path{a};
  int u = a;
  while (u != b) {
    int next = -1;
    for (const Edge& e : g.adj[static_cast<std::size_t>(u)]) {
      if (to_b[static_cast<std::size_t>(e.to)] + e.weight == to_b[static_cast<std::size_t>(u)]) {
        next = e.to;
        break;
      }
    }
    if (next < 0) {
      // Rounding on non-dyadic weights: fall back to the closest neighbour.
      double best = kInf;
      for (const Edge& e : g.adj[static_cast<std::size_t>(u)]) {
        const double d = to_b[static_cast<std::size_t>(e.to)] + e.weight;
        if (to_b[static_cast<std::size_t>(e.to)] < to_b[static_cast<std::size_t>(u)] && d < best) {
          best = d;
          next = e.to;
        }
      }
    }
    u = next;
    path.push_back(u);
  }
  return path;
}

double path_length(const RouteGraph& g, const std::vector<int>& path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto& edges = g.adj[static_cast<std::size_t>(path[i - 1])];
    auto it = std::find_if(edges.begin(), edges.end(),
                           [&](const Edge& e) { return e.to == path[i]; });
    total += it->weight;
  }
  return total;
}

std::vector<SlotId> unique_slots(const std::vector<SlotId>& picks) {
  std::vector<SlotId> out;
  for (const SlotId s : picks)
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  return out;
}

// Distances between stop 0 (depot) and stops 1..n (picks).
struct StopMatrix {
  std::size_t n = 0; // number of picks
  std::vector<double> d;
  double operator()(std::size_t i, std::size_t j) const { return d[i * (n + 1) + j]; }
};

StopMatrix stop_matrix(DistanceCache& cache, int depot, const std::vector<SlotId>& slots) {
  const RouteGraph& g = cache.graph();
  std::vector<int> stops{depot};
  for (const SlotId s : slots) stops.push_back(g.pick_node_of(s));
  StopMatrix m;
  m.n = slots.size();
  m.d.assign((m.n + 1) * (m.n + 1), 0.0);
  for (std::size_t j = 0; j <= m.n; ++j) {
    const auto& tree = cache.from(stops[j]);
    for (std::size_t i = 0; i <= m.n; ++i) {
      const double v = tree[static_cast<std::size_t>(stops[i])];
      if (!std::isfinite(v)) {
        const std::size_t bad = i == 0 ? j : i;
        throw UnreachableError("pick " + std::to_string(slots[bad - 1].row) + ":" +
                               std::to_string(slots[bad - 1].index) +
                               " is unreachable from the depot");
      }
      m.d[i * (m.n + 1) + j] = v;
    }
  }
  return m;
}

// Tour cost summed left to right: depot, order..., depot. Order holds
// 1-based stop indices.
double tour_cost(const StopMatrix& m, const std::vector<std::size_t>& order) {
  double c = 0.0;
  std::size_t prev = 0;
  for (std::size_t s : order) {
    c += m(prev, s);
    prev = s;
  }
  return c + m(prev, 0);
}

std::vector<std::size_t> held_karp(const StopMatrix& m) {
  const std::size_t n = m.n;
  const std::size_t full = (std::size_t{1} << n) - 1;
  std::vector<double> dp((full + 1) * n, kInf);
  std::vector<int> parent((full + 1) * n, -1);
  for (std::size_t j = 0; j < n; ++j) dp[(std::size_t{1} << j) * n + j] = m(0, j + 1);
  for (std::size_t mask = 1; mask <= full; ++mask) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(mask & (std::size_t{1} << j))) continue;
      const double here = dp[mask * n + j];
      if (!std::isfinite(here)) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (mask & (std::size_t{1} << k)) continue;
        const std::size_t next = mask | (std::size_t{1} << k);
        const double cand = here + m(j + 1, k + 1);
        if (cand < dp[next * n + k]) {
          dp[next * n + k] = cand;
          parent[next * n + k] = static_cast<int>(j);
        }
      }
    }
  }
  std::size_t last = 0;
  double best = kInf;
  for (std::size_t j = 0; j < n; ++j) {
    const double c = dp[full * n + j] + m(j + 1, 0);
    if (c < best) {
      best = c;
      last = j;
    }
  }
  std::vector<std::size_t> order;
  std::size_t mask = full;
  int cur = static_cast<int>(last);
  while (cur >= 0) {
    order.push_back(static_cast<std::size_t>(cur) + 1);
    const int p = parent[mask * n + static_cast<std::size_t>(cur)];
    mask &= ~(std::size_t{1} << static_cast<std::size_t>(cur));
    cur = p;
  }
  std::reverse(order.begin(), order.end());
  return order;
}

std::vector<std::size_t> nearest_neighbour(const StopMatrix& m) {
  std::vector<std::size_t> order;
  std::vector<bool> used(m.n + 1, false);
  std::size_t cur = 0;
  for (std::size_t step = 0; step < m.n; ++step) {
    std::size_t best = 0;
    double bd = kInf;
    for (std::size_t s = 1; s <= m.n; ++s)
      if (!used[s] && m(cur, s) < bd) {
        bd = m(cur, s);
        best = s;
      }
    used[best] = true;
    order.push_back(best);
    cur = best;
  }
  return order;
}

void two_opt(const StopMatrix& m, std::vector<std::size_t>& order, int cap) {
  const std::size_t n = order.size();
  auto at = [&](std::size_t pos) { return pos == 0 || pos == n + 1 ? std::size_t{0} : order[pos - 1]; };
  for (int iter = 0; iter < cap; ++iter) {
    bool improved = false;
    for (std::size_t i = 1; i < n && !improved; ++i) {
      for (std::size_t j = i + 1; j <= n && !improved; ++j) {
        const double delta = m(at(i - 1), at(j)) + m(at(i), at(j + 1)) - m(at(i - 1), at(i)) -
                             m(at(j), at(j + 1));
        if (delta < -1e-9) {
          std::reverse(order.begin() + static_cast<std::ptrdiff_t>(i - 1),
                       order.begin() + static_cast<std::ptrdiff_t>(j));
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
}

Route assemble(const RouteGraph& g, DistanceCache& cache, int depot,
               const std::vector<SlotId>& slots, const std::vector<std::size_t>& order) {
  Route r;
  r.path.push_back(depot);
  int cur = depot;
  auto leg = [&](int to) {
    const auto p = cache.path(cur, to);
    r.path.insert(r.path.end(), p.begin() + 1, p.end());
    cur = to;
  };
  for (std::size_t s : order) {
    const SlotId slot = slots[s - 1];
    r.visits.push_back(slot);
    const int node = g.pick_node_of(slot);
    leg(node);
    const int a = g.aisle[static_cast<std::size_t>(node)];
    if (a >= 0) ++r.aisle_pick_counts[a];
  }
  leg(depot);
  r.total_distance = path_length(g, r.path);
  int prev_aisle = -1;
  for (int node : r.path) {
    const int a = g.aisle[static_cast<std::size_t>(node)];
    if (a >= 0 && a != prev_aisle) ++r.aisle_traversal_counts[a];
    prev_aisle = a;
  }
  return r;
}

} // namespace

std::vector<double> dijkstra_distances(const RouteGraph& g, int source) {
  check_node(g, source);
  std::vector<double> dist(g.node_count(), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[static_cast<std::size_t>(source)] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (const Edge& e : g.adj[static_cast<std::size_t>(u)]) {
      const double nd = d + e.weight;
      if (nd < dist[static_cast<std::size_t>(e.to)]) {
        dist[static_cast<std::size_t>(e.to)] = nd;
        heap.push({nd, e.to});
      }
    }
  }
  return dist;
}

PathResult shortest_path(const RouteGraph& g, int a, int b) {
  check_node(g, a);
  check_node(g, b);
  const auto to_b = dijkstra_distances(g, b);
  if (!std::isfinite(to_b[static_cast<std::size_t>(a)]))
    throw UnreachableError("node " + std::to_string(b) + " is unreachable from " +
                           std::to_string(a));
  return {to_b[static_cast<std::size_t>(a)], walk_tree(g, to_b, a, b)};
}

const std::vector<double>& DistanceCache::from(int node) {
  std::lock_guard lock(mu_);
  auto& slot = trees_[node];
  if (!slot) slot = std::make_unique<std::vector<double>>(dijkstra_distances(*graph_, node));
  return *slot;
}

std::vector<int> DistanceCache::path(int a, int b) {
  const auto& tree = from(b);
  if (!std::isfinite(tree[static_cast<std::size_t>(a)]))
    throw UnreachableError("node " + std::to_string(b) + " is unreachable from " +
                           std::to_string(a));
  return walk_tree(*graph_, tree, a, b);
}

Route optimize_pick_sequence(const RouteGraph& graph, int depot, const std::vector<SlotId>& picks,
                             const SequenceOptions& options, DistanceCache* cache) {
  if (picks.empty()) throw InvalidArgument("pick list is empty");
  check_node(graph, depot);
  DistanceCache local(graph);
  DistanceCache& dc = cache ? *cache : local;
  const auto slots = unique_slots(picks);
  const StopMatrix m = stop_matrix(dc, depot, slots);

  std::vector<std::size_t> given(slots.size());
  for (std::size_t i = 0; i < given.size(); ++i) given[i] = i + 1;

  std::vector<std::size_t> order;
  if (static_cast<int>(slots.size()) <= options.exact_limit) {
    order = held_karp(m);
  } else {
    auto nn = nearest_neighbour(m);
    order = tour_cost(m, nn) < tour_cost(m, given) ? nn : given;
    two_opt(m, order, options.two_opt_cap);
    if (tour_cost(m, order) > tour_cost(m, given)) order = given;
  }
  return assemble(graph, dc, depot, slots, order);
}

Route route_in_given_order(const RouteGraph& graph, int depot, const std::vector<SlotId>& picks,
                           DistanceCache* cache) {
  if (picks.empty()) throw InvalidArgument("pick list is empty");
  check_node(graph, depot);
  DistanceCache local(graph);
  DistanceCache& dc = cache ? *cache : local;
  const auto slots = unique_slots(picks);
  stop_matrix(dc, depot, slots); // reachability check
  std::vector<std::size_t> given(slots.size());
  for (std::size_t i = 0; i < given.size(); ++i) given[i] = i + 1;
  return assemble(graph, dc, depot, slots, given);
}

std::vector<double> PickingFrequency::mean_vector(std::size_t aisles) const {
  std::vector<double> out(aisles, 0.0);
  for (const auto& [a, v] : mean)
    if (a >= 0 && static_cast<std::size_t>(a) < aisles) out[static_cast<std::size_t>(a)] = v;
  return out;
}

double route_time(const Route& route, const SimParams& params) {
  return route.total_distance / params.picker_speed +
         static_cast<double>(route.visits.size()) * params.handle_time;
}

PickingFrequency picking_frequency(const std::vector<Route>& routes, const SimParams& params) {
  PickingFrequency pf;
  double seconds = 0.0;
  std::map<int, double> picks;
  for (const auto& r : routes) {
    seconds += route_time(r, params);
    for (const auto& [a, n] : r.aisle_pick_counts) picks[a] += n;
  }
  const double hours = seconds / 3600.0;
  for (const auto& [a, n] : picks) {
    pf.rate[a] = hours > 0 ? n / hours : 0.0;
    pf.mean[a] = pf.rate[a];
  }
  return pf;
}

} // namespace wsdo
