#include "wsdo/layout_opt.hpp"

#include <algorithm>
#include <cmath>

#include "wsdo/error.hpp"

namespace wsdo {

double relaxed_row_count(const RowTemplate& t, double aisle) {
  return (t.floor_depth + aisle) / (t.rack_depth + aisle);
}

double relaxed_utilization(const RowTemplate& t, double aisle) {
  return relaxed_row_count(t, aisle) * t.rack_depth / t.floor_depth;
}

NlpProblem layout_problem(const RowTemplate& t, const std::vector<double>& rates, double k,
                          double a_lb) {
  const int m = static_cast<int>(rates.size());
  NlpProblem p;
  p.dimension = m;
  p.objective = [t](const Vector& a) { return -relaxed_utilization(t, a.mean()); };
  p.gradient = [t, m](const Vector& a) {
    const double s = t.rack_depth + a.mean();
    const double du = t.rack_depth / t.floor_depth * (t.rack_depth - t.floor_depth) / (s * s);
    return Vector::Constant(m, -du / m).eval();
  };
  p.inequality_count = m;
  Vector clearance(m);
  for (int i = 0; i < m; ++i) clearance(i) = k * rates[static_cast<std::size_t>(i)];
  p.inequalities = [clearance](const Vector& a) { return (clearance - a).eval(); };
  p.inequality_jacobian = [m](const Vector&) { return (-Matrix::Identity(m, m)).eval(); };
  p.lower = Vector::Constant(m, a_lb);
  p.upper = Vector::Constant(m, t.floor_depth - t.rack_depth);
  return p;
}

LayoutOptResult optimize_layout(const RowTemplate& t, const std::vector<double>& rates, double k,
                                double a_lb, double tol) {
  if (!(t.floor_depth > t.rack_depth) || !(t.rack_depth > 0))
    throw InvalidArgument("floor depth must exceed the rack depth");
  if (!(a_lb > 0)) throw InvalidArgument("minimum aisle width must be positive");
  if (rates.empty()) throw InvalidArgument("at least one aisle rate is required");
  const double room = t.floor_depth - t.rack_depth;
  if (a_lb > room) throw InfeasibleError("minimum aisle width leaves no room for a rack row");
  for (double r : rates) {
    if (!std::isfinite(r) || r < 0) throw InvalidArgument("aisle rates must be finite and >= 0");
    if (k * r >= room)
      throw InfeasibleError("clearance " + std::to_string(k * r) +
                            " m leaves no room for a rack row");
  }

  const NlpProblem p = layout_problem(t, rates, k, a_lb);
  Vector x0(p.dimension);
  for (int i = 0; i < p.dimension; ++i)
    x0(i) = std::min(room, std::max(a_lb, k * rates[static_cast<std::size_t>(i)]) + 1.0);

  LayoutOptResult out;
  out.solver = sqp_solve(p, x0, tol);
  if (out.solver.status == NlpStatus::infeasible)
    throw InfeasibleError("layout problem has no feasible aisle widths");
  out.aisle_widths.assign(out.solver.x.data(), out.solver.x.data() + out.solver.x.size());
  const double mean = out.solver.x.mean();
  out.utilization = relaxed_utilization(t, mean);
  out.row_count = relaxed_row_count(t, mean);
  out.rounded_rows = static_cast<int>(std::floor(out.row_count + 1e-12));
  out.rounded_utilization = out.rounded_rows * t.rack_depth / t.floor_depth;
  return out;
}

RowTemplate row_template(const Layout& layout) {
  if (layout.rack_rows.empty()) throw InvalidArgument("layout has no rack rows");
  return {layout.floor_depth, layout.rack_rows.front().depth, layout.rack_rows.front().length};
}

} // namespace wsdo
