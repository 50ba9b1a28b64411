#include "wsdo/route_graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wsdo/error.hpp"

namespace wsdo {

namespace {

constexpr double kEps = 1e-9;

bool overlaps(const Rect& r, double x0, double y0, double x1, double y1) {
  return x0 < r.x1 - kEps && x1 > r.x0 + kEps && y0 < r.y1 - kEps && y1 > r.y0 + kEps;
}

// y-bands of the aisles: front wall, inter-row gaps, back wall.
std::vector<std::pair<double, double>> aisle_bands(const Layout& layout) {
  std::vector<std::pair<double, double>> bands;
  const auto& rows = layout.rack_rows;
  if (rows.empty()) return bands;
  double lo = 0.0;
  for (const auto& r : rows) {
    bands.emplace_back(lo, r.offset);
    lo = r.offset + r.depth;
  }
  bands.emplace_back(lo, std::min(layout.floor_depth, lo + layout.aisle_widths.back()));
  return bands;
}

} // namespace

std::size_t RouteGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& a : adj) n += a.size();
  return n / 2;
}

Point RouteGraph::center(int node) const {
  const auto u = static_cast<std::size_t>(node);
  return {(cell_x[u] + 0.5) * cell_size, (cell_y[u] + 0.5) * cell_size};
}

int RouteGraph::node_at(int x, int y) const {
  if (x < 0 || y < 0 || x >= nx || y >= ny) return -1;
  return cell_to_node[static_cast<std::size_t>(y) * static_cast<std::size_t>(nx) +
                      static_cast<std::size_t>(x)];
}

int RouteGraph::pick_node_of(SlotId slot) const {
  auto it = slot_pick.find(slot);
  if (it == slot_pick.end())
    throw InvalidArgument("slot " + std::to_string(slot.row) + ":" + std::to_string(slot.index) +
                          " is not part of the route graph");
  return it->second;
}

RouteGraph build_route_graph(const Layout& layout, double cell_size) {
  if (!(cell_size > 0)) throw InvalidArgument("cell size must be positive");
  validate_layout(layout);

  double min_aisle = INFINITY;
  for (double a : layout.aisle_widths)
    if (a > 0) min_aisle = std::min(min_aisle, a);
  if (cell_size > min_aisle + kEps)
    throw DiscretizationError("cell size " + std::to_string(cell_size) +
                              " exceeds the narrowest aisle " + std::to_string(min_aisle));

  RouteGraph g;
  g.cell_size = cell_size;
  g.nx = static_cast<int>(std::floor(layout.floor_width / cell_size + kEps));
  g.ny = static_cast<int>(std::floor(layout.floor_depth / cell_size + kEps));
  if (g.nx < 1 || g.ny < 1) throw DiscretizationError("cell size larger than the floor");

  std::vector<Rect> racks;
  for (std::size_t r = 0; r < layout.rack_rows.size(); ++r)
    racks.push_back(rack_footprint(layout, r));

  const auto bands = aisle_bands(layout);
  // Aisles span the racked x-range; the margins beyond are cross aisles.
  double span_x0 = layout.floor_width, span_x1 = 0.0;
  for (const Rect& r : racks) {
    span_x0 = std::min(span_x0, r.x0);
    span_x1 = std::max(span_x1, r.x1);
  }
  g.cell_to_node.assign(static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny), -1);
  for (int y = 0; y < g.ny; ++y) {
    for (int x = 0; x < g.nx; ++x) {
      const double x0 = x * cell_size, y0 = y * cell_size;
      const bool blocked = std::any_of(racks.begin(), racks.end(), [&](const Rect& r) {
        return overlaps(r, x0, y0, x0 + cell_size, y0 + cell_size);
      });
      if (blocked) continue;
      const int id = static_cast<int>(g.adj.size());
      g.cell_to_node[static_cast<std::size_t>(y) * static_cast<std::size_t>(g.nx) +
                     static_cast<std::size_t>(x)] = id;
      g.cell_x.push_back(x);
      g.cell_y.push_back(y);
      g.adj.emplace_back();
      const double cx = x0 + cell_size / 2.0, cy = y0 + cell_size / 2.0;
      int aisle = -1;
      if (cx > span_x0 && cx < span_x1) {
        for (std::size_t b = 0; b < bands.size(); ++b)
          if (bands[b].second - bands[b].first > kEps && cy >= bands[b].first - kEps &&
              cy <= bands[b].second + kEps) {
            aisle = static_cast<int>(b);
            break;
          }
      }
      g.aisle.push_back(aisle);
    }
  }

  for (std::size_t u = 0; u < g.adj.size(); ++u) {
    const int x = g.cell_x[u], y = g.cell_y[u];
    // Sorted by id: below, left, right, above.
    for (auto [dx, dy] : {std::pair{0, -1}, {-1, 0}, {1, 0}, {0, 1}}) {
      const int v = g.node_at(x + dx, y + dy);
      if (v >= 0) g.adj[u].push_back({v, cell_size});
    }
  }

  // Every non-degenerate aisle needs at least one walkable grid row.
  for (std::size_t b = 0; b < bands.size(); ++b) {
    if (bands[b].second - bands[b].first <= kEps) continue;
    const bool any = std::any_of(g.aisle.begin(), g.aisle.end(),
                                 [&](int a) { return a == static_cast<int>(b); });
    if (!any)
      throw DiscretizationError("aisle " + std::to_string(b) +
                                " has no walkable cell at this cell size");
  }

  for (const SlotId s : all_slots(layout)) {
    const Point face = slot_face(layout, s);
    const auto& row = layout.rack_rows[static_cast<std::size_t>(s.row)];
    const int col = std::clamp(static_cast<int>(std::floor(face.x / cell_size)), 0, g.nx - 1);
    const int front = static_cast<int>(std::floor(row.offset / cell_size + kEps)) - 1;
    const int back = static_cast<int>(std::ceil((row.offset + row.depth) / cell_size - kEps));
    int node = g.node_at(col, front);
    if (node < 0) node = g.node_at(col, back);
    if (node < 0)
      throw IsolationError("slot " + std::to_string(s.row) + ":" + std::to_string(s.index) +
                           " has no walkable neighbour");
    g.pick_node.push_back(node);
    g.slot_pick[s] = node;
  }

  const int dx = std::clamp(static_cast<int>(std::floor(layout.depot.x / cell_size)), 0, g.nx - 1);
  const int dy = std::clamp(static_cast<int>(std::floor(layout.depot.y / cell_size)), 0, g.ny - 1);
  g.depot_node = g.node_at(dx, dy);
  if (g.depot_node < 0) throw InvalidArgument("depot cell is blocked by a rack");
  return g;
}

} // namespace wsdo
