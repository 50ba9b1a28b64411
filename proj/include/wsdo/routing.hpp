#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "wsdo/core.hpp"
#include "wsdo/route_graph.hpp"

namespace wsdo {

struct PathResult {
  double distance = 0.0;
  std::vector<int> path;
};

// Single-source Dijkstra (binary heap). Unreachable nodes are +inf.
std::vector<double> dijkstra_distances(const RouteGraph& graph, int source);

// Minimum-distance path; among equal-length paths the lexicographically
// smallest node-id sequence is returned.
PathResult shortest_path(const RouteGraph& graph, int a, int b);

// Thread-safe memo of single-source distance trees. Because the graph is
// undirected a tree rooted at b also gives every distance *to* b.
class DistanceCache {
public:
  explicit DistanceCache(const RouteGraph& graph) : graph_(&graph) {}

  const std::vector<double>& from(int node);
  double distance(int a, int b) { return from(b)[static_cast<std::size_t>(a)]; }
  // Lexicographically smallest shortest path a -> b, built from the tree at b.
  std::vector<int> path(int a, int b);
  const RouteGraph& graph() const { return *graph_; }

private:
  const RouteGraph* graph_;
  std::mutex mu_;
  std::map<int, std::unique_ptr<std::vector<double>>> trees_;
};

struct Route {
  std::vector<SlotId> visits;
  std::vector<int> path;
  double total_distance = 0.0;
  std::map<int, int> aisle_traversal_counts; // entries into each aisle along the path
  std::map<int, int> aisle_pick_counts;      // picks made from each aisle
};

struct SequenceOptions {
  int exact_limit = 8;
  int two_opt_cap = 1000;
};

// Depot -> picks -> depot. Duplicate slots are visited once. Exact (Held-Karp
// dynamic programme) up to exact_limit distinct picks, otherwise the better of
// nearest-neighbour and the given order improved by first-improvement 2-opt.
Route optimize_pick_sequence(const RouteGraph& graph, int depot, const std::vector<SlotId>& picks,
                             const SequenceOptions& options = {}, DistanceCache* cache = nullptr);

// Visits the picks in the order given (duplicates dropped).
Route route_in_given_order(const RouteGraph& graph, int depot, const std::vector<SlotId>& picks,
                           DistanceCache* cache = nullptr);

struct PickingFrequency {
  std::map<int, double> rate; // picks per hour, by aisle
  std::map<int, double> mean; // single-period model: equal to rate

  // Dense per-aisle vector, zero where no picks were made.
  std::vector<double> mean_vector(std::size_t aisles) const;
};

double route_time(const Route& route, const SimParams& params);
PickingFrequency picking_frequency(const std::vector<Route>& routes, const SimParams& params);

} // namespace wsdo
