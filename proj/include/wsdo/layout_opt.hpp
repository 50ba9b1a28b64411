#pragma once

#include <vector>

#include "wsdo/core.hpp"
#include "wsdo/sqp.hpp"

namespace wsdo {

struct RowTemplate {
  double floor_depth = 0.0; // D
  double rack_depth = 0.0;  // d_r
  double row_length = 0.0;  // L
};

// Continuous row count for a uniform aisle width a: n rows and n - 1 aisles
// filling the floor depth, n(a) = (D + a) / (d_r + a).
double relaxed_row_count(const RowTemplate& t, double aisle);
double relaxed_utilization(const RowTemplate& t, double aisle);

// max utilization(mean a) s.t. k * rate_i - a_i <= 0, a_i >= a_lb, as an NLP in
// the per-aisle widths with analytic derivatives.
NlpProblem layout_problem(const RowTemplate& t, const std::vector<double>& rates, double k,
                          double a_lb);

struct LayoutOptResult {
  std::vector<double> aisle_widths;
  double utilization = 0.0;     // relaxed
  double row_count = 0.0;       // relaxed
  int rounded_rows = 0;
  double rounded_utilization = 0.0;
  NlpResult solver;
};

LayoutOptResult optimize_layout(const RowTemplate& t, const std::vector<double>& rates, double k,
                                double a_lb, double tol = 1e-10);

RowTemplate row_template(const Layout& layout);

} // namespace wsdo
