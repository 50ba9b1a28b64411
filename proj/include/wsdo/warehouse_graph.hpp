#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "wsdo/layout_opt.hpp"
#include "wsdo/nhatc.hpp"

namespace wsdo {

struct WarehouseOptions {
  std::uint64_t seed = 42;
  int clusters = 0; // 0: one per rack row
  double move_cost = 1.0;
  double budget = 40.0;
  double min_aisle = kDefaultMinAisle;
  double svm_c = 1.0;
  int svm_epochs = 20;
  int batch_cap = 5;
};

void to_json(json& j, const WarehouseOptions& o);
void from_json(const json& j, WarehouseOptions& o);

// Node ids of the default graph, also the names accepted by --active.
inline const std::vector<std::string> kWarehouseNodes{"layout", "routing", "slotting", "reassignment",
                                                      "classification"};

// Five subsystems and the links between them:
//   layout -> routing          aisle_widths
//   routing -> layout          pick_rate (layout keeps its own copy of the rates)
//   layout -> classification   widths_class
//   slotting -> reassignment   proposed_slots
//   reassignment -> routing    slots_routing
//   reassignment -> classification slots_class
//   slotting -> classification cluster_labels
// Initial link values describe the instance as given.
NhatcGraph warehouse_graph(const Instance& instance, const WarehouseOptions& options = {});

// Slot positions (all_slots order) per catalog product, and back.
Vector slots_vector(const Instance& instance, const SlotAssignment& assignment);
SlotAssignment assignment_from_vector(const Instance& instance, const Vector& slots);

struct HistoryRouting {
  double total_distance = 0.0;
  double route_hours = 0.0;
  std::vector<double> pick_rates; // per aisle
};

// Routes every historical order (optimized sequence) on the given layout.
HistoryRouting route_history(const Instance& instance, const Layout& layout,
                             const SlotAssignment& assignment);

// The layout subproblem in x = [aisle widths; local copy of the pick rates]:
// maximise utilization subject to clearance and floor depth, plus the
// penalty on the rate copy.
struct LayoutNodeProblem {
  NlpProblem problem;
  Vector x0;
  RowTemplate tmpl;
  Eigen::Index aisles = 0;
};
LayoutNodeProblem layout_node_problem(const Instance& instance, const WarehouseOptions& options,
                                      const NodeInput& in);

NodeOutput solve_layout_node(const NodeSpec& spec, const NodeInput& in, double tol);
NodeOutput solve_routing_node(const NodeSpec& spec, const NodeInput& in, double tol);
NodeOutput solve_slotting_node(const NodeSpec& spec, const NodeInput& in, double tol);
NodeOutput solve_reassignment_node(const NodeSpec& spec, const NodeInput& in, double tol);
NodeOutput solve_classification_node(const NodeSpec& spec, const NodeInput& in, double tol);

} // namespace wsdo
