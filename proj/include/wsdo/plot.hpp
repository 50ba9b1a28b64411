#pragma once

#include <optional>
#include <string>

#include "wsdo/core.hpp"
#include "wsdo/route_graph.hpp"
#include "wsdo/routing.hpp"

namespace wsdo {

struct PlotOptions {
  double pixels_per_meter = 20.0;
  double margin = 20.0; // pixels
};

// Standalone SVG: floor outline as a path, one <rect> per rack row, the route
// (if any) as a polyline through its grid path, the depot as a circle.
std::string render_svg(const Layout& layout, const RouteGraph& graph, const std::optional<Route>& route,
                       const PlotOptions& options = {});

} // namespace wsdo
