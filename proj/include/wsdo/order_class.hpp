#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wsdo/core.hpp"
#include "wsdo/json_io.hpp"
#include "wsdo/slotting.hpp"
#include "wsdo/sqp.hpp"

namespace wsdo {

// Per-cluster item counts (quantities) scaled to unit l1 norm, followed by
// the order's line count. Dimension k + 1.
using OrderFeatures = Vector;

OrderFeatures featurize_order(const Order& order, const std::map<std::string, int>& cluster_of,
                              int k);
OrderFeatures featurize_order(const Order& order, const Clustering& clustering,
                              const SlotAssignment& assignment);

// Cluster holding most of the order's items, lowest id on ties.
int dominant_cluster(const OrderFeatures& features);

struct Sample {
  OrderFeatures x;
  int label = 0;
  std::int64_t timestamp = 0;
  std::string order_id;
};

// One sample per order, labelled with its dominant cluster.
std::vector<Sample> bootstrap_samples(const std::vector<Order>& orders,
                                      const Clustering& clustering,
                                      const SlotAssignment& assignment);

struct SvmModel {
  std::vector<int> labels; // ascending
  Matrix weights;          // one row per label
  Vector bias;
  double C = 1.0;
  int epochs = 50;
  std::uint64_t seed = 0;
  std::size_t window_capacity = 0;
  std::int64_t oldest_timestamp = 0;
  std::int64_t newest_timestamp = 0;

  std::vector<double> scores(const OrderFeatures& x) const;
  // Highest score; the smallest label wins ties.
  int predict(const OrderFeatures& x) const;
};

// Sum over one-vs-rest problems of lambda/2 (|w|^2 + b^2) + mean hinge loss,
// lambda = 1 / (C n).
double svm_objective(const SvmModel& model, const std::vector<Sample>& samples);
double svm_accuracy(const SvmModel& model, const std::vector<Sample>& samples);

// Pegasos-style subgradient descent per category. Throws InvalidArgument if
// fewer than two categories are present or C <= 0.
SvmModel svm_train(const std::vector<Sample>& samples, double C, int epochs, std::uint64_t seed,
                   std::size_t window_capacity = 0);

struct SampleWindow {
  std::size_t capacity = 0;
  std::deque<Sample> samples;

  std::vector<Sample> contents() const { return {samples.begin(), samples.end()}; }
};

// FIFO window update followed by a warm-started retrain. Unseen categories
// extend the label set.
std::pair<SvmModel, SampleWindow> svm_update(const SvmModel& model, const SampleWindow& window,
                                             const std::vector<Sample>& new_batch);

inline constexpr int kDefaultBatchCap = 5;

struct PickBatch {
  int id = 0;
  int category = 0;
  std::vector<std::string> order_ids;
  std::vector<SlotId> visits; // first-appearance order, no repeats
  int cart = 0;
};

struct Picklists {
  std::vector<PickBatch> batches; // dispatch order
  int parallelism = 0;
};

// min(max_carts, min over aisles of floor(width / cart_width)); throws
// InfeasibleError when that is zero.
int parallelism_limit(const std::vector<double>& aisle_widths, const SimParams& params);

Picklists build_picklists(const std::vector<Order>& orders, const SvmModel& model,
                          const Clustering& clustering, const SlotAssignment& assignment,
                          const std::vector<double>& aisle_widths, const SimParams& params,
                          int batch_cap = kDefaultBatchCap);

void to_json(json& j, const SvmModel& m);
void from_json(const json& j, SvmModel& m);

} // namespace wsdo
