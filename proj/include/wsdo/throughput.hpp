#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wsdo/core.hpp"
#include "wsdo/json_io.hpp"

namespace wsdo {

enum class SlottingPolicy { random, clustered };
enum class SequencingPolicy { given_order, optimized };
enum class BatchingPolicy { one_order_per_trip, svm_batched };
enum class LayoutPolicy { frozen, optimized };

struct PolicyBundle {
  SlottingPolicy slotting = SlottingPolicy::random;
  SequencingPolicy sequencing = SequencingPolicy::given_order;
  BatchingPolicy batching = BatchingPolicy::one_order_per_trip;
  LayoutPolicy layout = LayoutPolicy::frozen;

  static PolicyBundle baseline() { return {}; }
  static PolicyBundle optimized() {
    return {SlottingPolicy::clustered, SequencingPolicy::optimized, BatchingPolicy::svm_batched,
            LayoutPolicy::frozen};
  }
  bool operator==(const PolicyBundle&) const = default;
};

std::string to_string(SlottingPolicy p);
std::string to_string(SequencingPolicy p);
std::string to_string(BatchingPolicy p);
std::string to_string(LayoutPolicy p);

void to_json(json& j, const PolicyBundle& b);
// Every dimension must be present exactly once; throws ConfigError otherwise.
void from_json(const json& j, PolicyBundle& b);
// "random,optimized,svm-batched,frozen" style shorthand, in field order.
PolicyBundle parse_bundle(const std::string& text);

struct SimOptions {
  int clusters = 0; // 0: one per rack row
  double svm_c = 1.0;
  int svm_epochs = 20;
  int batch_cap = 5;
  double min_aisle = kDefaultMinAisle;
};

struct Trip {
  int batch = 0;
  std::vector<std::string> order_ids;
  int picks = 0; // distinct slots visited
  double distance = 0.0; // meters
  double start = 0.0;    // seconds from shift start
  double end = 0.0;
  bool completed = false;
};

struct CartTimeline {
  int cart = 0;
  std::vector<Trip> trips;
  double busy = 0.0; // seconds inside the shift
  double idle = 0.0;
};

struct ThroughputReport {
  PolicyBundle bundle;
  std::uint64_t seed = 0;
  int orders_offered = 0;
  int orders_completed = 0;
  int orders_in_progress = 0;
  int orders_never_started = 0;
  int trips_completed = 0;
  double travel_meters = 0.0;         // completed trips
  double planned_travel_meters = 0.0; // every routed batch
  double total_time = 0.0;            // busy seconds summed over carts
  double shift_seconds = 0.0;
  double utilization = 0.0;
  int parallelism = 0;
  std::vector<double> aisle_widths;
  std::vector<CartTimeline> carts;
};

void to_json(json& j, const Trip& t);
void to_json(json& j, const CartTimeline& c);
void to_json(json& j, const ThroughputReport& r);

// Replays the instance's order history as one shift. P carts (the clearance
// limit) each pull the next batch as soon as they are free; a trip takes
// distance / picker_speed + picks * handle_time. Throws InfeasibleError when
// P is zero.
ThroughputReport simulate_day(const Instance& instance, const PolicyBundle& bundle, std::uint64_t seed,
                              const SimOptions& options = {});

struct Comparison {
  ThroughputReport baseline;
  ThroughputReport optimized;
  std::optional<double> improvement; // empty when the baseline completed nothing
  std::optional<double> distance_ratio; // planned meters, optimized / baseline
};

Comparison compare_policies(const Instance& instance, const PolicyBundle& baseline,
                            const PolicyBundle& optimized, std::uint64_t seed,
                            const SimOptions& options = {});

void to_json(json& j, const Comparison& c);

std::string csv_header();
std::string csv_row(const std::string& label, const ThroughputReport& r);

} // namespace wsdo
