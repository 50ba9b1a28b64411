#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "wsdo/core.hpp"

namespace wsdo {

struct Edge {
  int to = 0;
  double weight = 0.0;
};

// Walkable-cell graph over a uniform grid. Node ids follow row-major cell
// order (y-major, then x), so comparing ids compares cells lexicographically.
struct RouteGraph {
  double cell_size = 1.0;
  int nx = 0;
  int ny = 0;
  std::vector<int> cell_x;              // per node
  std::vector<int> cell_y;              // per node
  std::vector<int> cell_to_node;        // nx*ny entries, -1 when blocked
  std::vector<std::vector<Edge>> adj;   // neighbours sorted by id
  std::vector<int> pick_node;           // per slot, all_slots() order
  std::map<SlotId, int> slot_pick;      // same data keyed by slot
  std::vector<int> aisle;               // per node, -1 outside every aisle
  int depot_node = -1;

  std::size_t node_count() const { return adj.size(); }
  std::size_t edge_count() const;
  Point center(int node) const;
  int node_at(int x, int y) const;
  // Throws InvalidArgument for a slot the graph does not know.
  int pick_node_of(SlotId slot) const;
};

RouteGraph build_route_graph(const Layout& layout, double cell_size);

} // namespace wsdo
