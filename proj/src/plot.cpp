#include "wsdo/plot.hpp"

#include <iomanip>
#include <sstream>

namespace wsdo {

std::string render_svg(const Layout& layout, const RouteGraph& graph, const std::optional<Route>& route,
                       const PlotOptions& options) {
  const double s = options.pixels_per_meter;
  const double m = options.margin;
  auto px = [&](double meters) { return m + meters * s; };
  const double w = layout.floor_width * s + 2 * m;
  const double h = layout.floor_depth * s + 2 * m;

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
     << w << ' ' << h << "\">\n";
  os << "  <path class=\"floor\" d=\"M " << px(0) << ' ' << px(0) << " H " << px(layout.floor_width) << " V "
     << px(layout.floor_depth) << " H " << px(0) << " Z\" fill=\"#fafafa\" stroke=\"#333\" stroke-width=\"2\"/>\n";

  for (std::size_t i = 0; i < layout.rack_rows.size(); ++i) {
    const Rect r = rack_footprint(layout, i);
    os << "  <rect class=\"rack\" data-row=\"" << i << "\" x=\"" << px(r.x0) << "\" y=\"" << px(r.y0)
       << "\" width=\"" << (r.x1 - r.x0) * s << "\" height=\"" << (r.y1 - r.y0) * s
       << "\" fill=\"#8d99ae\" stroke=\"#2b2d42\"/>\n";
  }

  if (route && !route->path.empty()) {
    os << "  <polyline class=\"route\" fill=\"none\" stroke=\"#d62828\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < route->path.size(); ++i) {
      const Point p = graph.center(route->path[i]);
      os << (i ? " " : "") << px(p.x) << ',' << px(p.y);
    }
    os << "\"/>\n";
    for (const SlotId slot : route->visits) {
      const Point p = graph.center(graph.pick_node_of(slot));
      os << "  <circle class=\"pick\" cx=\"" << px(p.x) << "\" cy=\"" << px(p.y) << "\" r=\"3\" fill=\"#d62828\"/>\n";
    }
  }

  os << "  <circle class=\"depot\" cx=\"" << px(layout.depot.x) << "\" cy=\"" << px(layout.depot.y)
     << "\" r=\"7\" fill=\"#2a9d8f\" stroke=\"#000\"/>\n";
  os << "</svg>\n";
  return os.str();
}

} // namespace wsdo
