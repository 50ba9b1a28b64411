#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wsdo/core.hpp"
#include "wsdo/route_graph.hpp"
#include "wsdo/sqp.hpp"

namespace wsdo {

// One row per catalog product: pick frequency, mean line count of the orders
// containing it, and co-pick affinity (share of the catalog it was ever picked
// with). Columns are standardised to zero mean and unit variance; a constant
// column becomes all zeros.
struct ProductFeatures {
  std::vector<std::string> product_ids;
  Matrix values;
  Matrix raw;
};

ProductFeatures product_features(const std::vector<Product>& catalog,
                                 const std::vector<Order>& history);

struct Clustering {
  int k = 0;
  std::vector<std::string> product_ids; // row labels, may be empty for bare matrices
  std::vector<int> labels;
  Matrix centroids;
  double inertia = 0.0;
  std::vector<double> inertia_history; // after every assignment step
  int iterations = 0;
  int reseeds = 0;

  std::map<std::string, int> cluster_of() const;
};

inline constexpr int kKmeansMaxIter = 300;

// k-means++ seeding then Lloyd iterations until the labels stop changing or
// kKmeansMaxIter rounds. An empty cluster is re-seeded at the point farthest
// from its own centroid (lowest index on ties).
Clustering kmeans(const Matrix& points, int k, std::uint64_t seed);
Clustering kmeans_cluster(const ProductFeatures& features, int k, std::uint64_t seed);
// Continue Lloyd iterations from an existing clustering.
Clustering kmeans_refine(const Matrix& points, const Clustering& start);

double inertia(const Matrix& points, const std::vector<int>& labels, const Matrix& centroids);

// Distance from the depot to every slot's pick node, all_slots() order.
std::vector<double> slot_depot_distances(const Layout& layout, const RouteGraph& graph);

SlotAssignment assign_slots(const Clustering& clustering, const Layout& layout,
                            const RouteGraph& graph, const std::vector<Order>& history);

// Pick-frequency weighted mean depot distance of an assignment.
double weighted_depot_distance(const SlotAssignment& assignment, const Layout& layout,
                               const RouteGraph& graph, const std::vector<Order>& history);

struct Move {
  std::string product;
  SlotId from;
  SlotId to;
  double benefit = 0.0; // frequency-weighted depot meters saved
  double cost = 0.0;
  bool accepted = false;
  std::string reason; // accepted | non_positive_benefit | over_budget | slot_occupied
};

struct ReassignmentPlan {
  std::vector<Move> moves; // in evaluation order
  double total_benefit = 0.0;
  double total_cost = 0.0;
  int accepted_count = 0;
};

ReassignmentPlan evaluate_reassignment(const SlotAssignment& current,
                                       const SlotAssignment& proposed,
                                       const std::vector<Order>& history, const Layout& layout,
                                       const RouteGraph& graph, double move_cost, double budget);

SlotAssignment apply_plan(const SlotAssignment& current, const ReassignmentPlan& plan);

} // namespace wsdo
