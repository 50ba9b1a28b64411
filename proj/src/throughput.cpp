#include "wsdo/throughput.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "wsdo/error.hpp"
#include "wsdo/layout_opt.hpp"
#include "wsdo/order_class.hpp"
#include "wsdo/route_graph.hpp"
#include "wsdo/routing.hpp"
#include "wsdo/slotting.hpp"
#include "wsdo/warehouse_graph.hpp"

namespace wsdo {

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::array<E, N>& values, const char* what) {
  for (E v : values)
    if (to_string(v) == s) return v;
  throw ConfigError(std::string("unknown ") + what + " policy '" + s + "'");
}

constexpr std::array kSlotting{SlottingPolicy::random, SlottingPolicy::clustered};
constexpr std::array kSequencing{SequencingPolicy::given_order, SequencingPolicy::optimized};
constexpr std::array kBatching{BatchingPolicy::one_order_per_trip, BatchingPolicy::svm_batched};
constexpr std::array kLayout{LayoutPolicy::frozen, LayoutPolicy::optimized};

struct Batch {
  std::vector<std::string> order_ids;
  std::vector<SlotId> visits;
};

std::vector<SlotId> visits_of(const std::vector<const Order*>& orders, const SlotAssignment& assignment) {
  std::vector<SlotId> visits;
  std::set<SlotId> seen;
  for (const Order* o : orders)
    for (const auto& l : o->lines) {
      const SlotId s = assignment.at(l.product_id);
      if (seen.insert(s).second) visits.push_back(s);
    }
  return visits;
}

SvmModel category_model(const std::vector<Sample>& samples, const SimOptions& options, std::uint64_t seed) {
  std::set<int> labels;
  for (const auto& s : samples) labels.insert(s.label);
  if (labels.size() >= 2) return svm_train(samples, options.svm_c, options.svm_epochs, seed);
  // A single category: every order lands in it.
  SvmModel m;
  m.labels = {labels.empty() ? 0 : *labels.begin()};
  const Eigen::Index dim = samples.empty() ? 1 : samples.front().x.size();
  m.weights = Matrix::Zero(1, dim);
  m.bias = Vector::Zero(1);
  m.C = options.svm_c;
  m.epochs = options.svm_epochs;
  m.seed = seed;
  return m;
}

} // namespace

std::string to_string(SlottingPolicy p) { return p == SlottingPolicy::random ? "random" : "clustered"; }
std::string to_string(SequencingPolicy p) {
  return p == SequencingPolicy::given_order ? "given-order" : "optimized";
}
std::string to_string(BatchingPolicy p) {
  return p == BatchingPolicy::one_order_per_trip ? "one-order-per-trip" : "svm-batched";
}
std::string to_string(LayoutPolicy p) { return p == LayoutPolicy::frozen ? "frozen" : "optimized"; }

void to_json(json& j, const PolicyBundle& b) {
  j = {{"slotting", to_string(b.slotting)},
       {"sequencing", to_string(b.sequencing)},
       {"batching", to_string(b.batching)},
       {"layout", to_string(b.layout)}};
}

void from_json(const json& j, PolicyBundle& b) {
  if (!j.is_object()) throw ConfigError("policy bundle must be an object");
  for (const char* key : {"slotting", "sequencing", "batching", "layout"})
    if (!j.contains(key) || !j[key].is_string())
      throw ConfigError(std::string("policy bundle lacks '") + key + "'");
  if (j.size() != 4) throw ConfigError("policy bundle has unexpected fields");
  b.slotting = parse_enum(j["slotting"].get<std::string>(), kSlotting, "slotting");
  b.sequencing = parse_enum(j["sequencing"].get<std::string>(), kSequencing, "sequencing");
  b.batching = parse_enum(j["batching"].get<std::string>(), kBatching, "batching");
  b.layout = parse_enum(j["layout"].get<std::string>(), kLayout, "layout");
}

PolicyBundle parse_bundle(const std::string& text) {
  if (text == "baseline") return PolicyBundle::baseline();
  if (text == "optimized") return PolicyBundle::optimized();
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
  if (parts.size() != 4)
    throw ConfigError("policy bundle needs slotting,sequencing,batching,layout: '" + text + "'");
  return {parse_enum(parts[0], kSlotting, "slotting"), parse_enum(parts[1], kSequencing, "sequencing"),
          parse_enum(parts[2], kBatching, "batching"), parse_enum(parts[3], kLayout, "layout")};
}

void to_json(json& j, const Trip& t) {
  j = {{"batch", t.batch},       {"orders", t.order_ids}, {"picks", t.picks}, {"distance", t.distance},
       {"start_s", t.start},     {"end_s", t.end},        {"completed", t.completed}};
}

void to_json(json& j, const CartTimeline& c) {
  j = {{"cart", c.cart}, {"busy_s", c.busy}, {"idle_s", c.idle}, {"trips", c.trips}};
}

void to_json(json& j, const ThroughputReport& r) {
  j = {{"bundle", r.bundle},
       {"seed", r.seed},
       {"orders_offered", r.orders_offered},
       {"orders_completed", r.orders_completed},
       {"orders_in_progress", r.orders_in_progress},
       {"orders_never_started", r.orders_never_started},
       {"trips_completed", r.trips_completed},
       {"travel_meters", r.travel_meters},
       {"planned_travel_meters", r.planned_travel_meters},
       {"total_time_s", r.total_time},
       {"shift_s", r.shift_seconds},
       {"utilization", r.utilization},
       {"parallelism", r.parallelism},
       {"aisle_widths", r.aisle_widths},
       {"carts", r.carts}};
}

ThroughputReport simulate_day(const Instance& instance, const PolicyBundle& bundle, std::uint64_t seed,
                              const SimOptions& options) {
  validate_instance(instance);
  const SimParams& params = instance.params;
  const int k = options.clusters > 0 ? options.clusters : static_cast<int>(instance.layout.rack_rows.size());

  const bool need_clusters =
      bundle.slotting == SlottingPolicy::clustered || bundle.batching == BatchingPolicy::svm_batched;
  Clustering clustering;
  if (need_clusters)
    clustering = kmeans_cluster(product_features(instance.catalog, instance.history), k, seed);

  Layout layout = instance.layout;
  SlotAssignment assignment = instance.assignment;
  if (bundle.slotting == SlottingPolicy::clustered) {
    const RouteGraph g = build_route_graph(layout, params.cell_size);
    assignment = assign_slots(clustering, layout, g, instance.history);
  }
  if (bundle.layout == LayoutPolicy::optimized) {
    const auto rates = route_history(instance, layout, assignment).pick_rates;
    const auto opt = optimize_layout(row_template(layout), rates, params.clearance_coeff, options.min_aisle);
    layout = with_aisle_widths(layout, opt.aisle_widths);
  }

  ThroughputReport rep;
  rep.bundle = bundle;
  rep.seed = seed;
  rep.orders_offered = static_cast<int>(instance.history.size());
  rep.shift_seconds = params.shift_length * 3600.0;
  rep.utilization = utilization(layout);
  rep.aisle_widths = layout.aisle_widths;
  rep.parallelism = parallelism_limit(layout.aisle_widths, params);

  std::map<std::string, const Order*> by_id;
  for (const auto& o : instance.history) by_id[o.id] = &o;

  std::vector<Batch> batches;
  if (bundle.batching == BatchingPolicy::one_order_per_trip) {
    std::vector<const Order*> sorted;
    for (const auto& o : instance.history) sorted.push_back(&o);
    std::stable_sort(sorted.begin(), sorted.end(), [](const Order* a, const Order* b) {
      return std::tie(a->timestamp, a->id) < std::tie(b->timestamp, b->id);
    });
    for (const Order* o : sorted) batches.push_back({{o->id}, visits_of({o}, assignment)});
  } else {
    const auto samples = bootstrap_samples(instance.history, clustering, assignment);
    const SvmModel model = category_model(samples, options, seed);
    const Picklists lists = build_picklists(instance.history, model, clustering, assignment,
                                            layout.aisle_widths, params, options.batch_cap);
    for (const auto& b : lists.batches) batches.push_back({b.order_ids, b.visits});
  }

  const RouteGraph graph = build_route_graph(layout, params.cell_size);
  DistanceCache cache(graph);
  std::vector<Route> routes;
  routes.reserve(batches.size());
  for (const auto& b : batches) {
    routes.push_back(bundle.sequencing == SequencingPolicy::optimized
                         ? optimize_pick_sequence(graph, graph.depot_node, b.visits, {}, &cache)
                         : route_in_given_order(graph, graph.depot_node, b.visits, &cache));
    rep.planned_travel_meters += routes.back().total_distance;
  }

  const auto P = static_cast<std::size_t>(rep.parallelism);
  rep.carts.resize(P);
  std::vector<double> free_at(P, 0.0);
  for (std::size_t c = 0; c < P; ++c) rep.carts[c].cart = static_cast<int>(c);
  std::size_t next = 0;
  for (; next < batches.size(); ++next) {
    const auto c = static_cast<std::size_t>(std::min_element(free_at.begin(), free_at.end()) - free_at.begin());
    if (free_at[c] >= rep.shift_seconds) break;
    Trip t;
    t.batch = static_cast<int>(next);
    t.order_ids = batches[next].order_ids;
    t.picks = static_cast<int>(routes[next].visits.size());
    t.distance = routes[next].total_distance;
    t.start = free_at[c];
    t.end = t.start + route_time(routes[next], params);
    t.completed = t.end <= rep.shift_seconds;
    const int n = static_cast<int>(t.order_ids.size());
    if (t.completed) {
      rep.orders_completed += n;
      rep.trips_completed += 1;
      rep.travel_meters += t.distance;
    } else {
      rep.orders_in_progress += n;
    }
    free_at[c] = t.end;
    rep.carts[c].busy += std::min(t.end, rep.shift_seconds) - t.start;
    rep.carts[c].trips.push_back(std::move(t));
  }
  for (; next < batches.size(); ++next) rep.orders_never_started += static_cast<int>(batches[next].order_ids.size());
  for (auto& cart : rep.carts) {
    cart.idle = rep.shift_seconds - cart.busy;
    rep.total_time += cart.busy;
  }
  return rep;
}

Comparison compare_policies(const Instance& instance, const PolicyBundle& baseline,
                            const PolicyBundle& optimized, std::uint64_t seed, const SimOptions& options) {
  Comparison c;
  c.baseline = simulate_day(instance, baseline, seed, options);
  c.optimized = baseline == optimized ? c.baseline : simulate_day(instance, optimized, seed, options);
  if (c.baseline.orders_completed > 0)
    c.improvement = static_cast<double>(c.optimized.orders_completed) / c.baseline.orders_completed - 1.0;
  if (c.baseline.planned_travel_meters > 0)
    c.distance_ratio = c.optimized.planned_travel_meters / c.baseline.planned_travel_meters;
  return c;
}

void to_json(json& j, const Comparison& c) {
  j = {{"throughputs",
        {{"baseline", c.baseline.orders_completed}, {"optimized", c.optimized.orders_completed}}},
       {"improvement", c.improvement ? json(*c.improvement) : json(nullptr)},
       {"distance_ratio", c.distance_ratio ? json(*c.distance_ratio) : json(nullptr)},
       {"baseline", c.baseline},
       {"optimized", c.optimized}};
  if (!c.improvement) j["improvement_note"] = "undefined: baseline completed no orders";
}

std::string csv_header() {
  return "label,slotting,sequencing,batching,layout,seed,orders_offered,orders_completed,"
         "orders_in_progress,orders_never_started,travel_meters,planned_travel_meters,total_time_s,"
         "utilization,parallelism\n";
}

std::string csv_row(const std::string& label, const ThroughputReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << label << ',' << to_string(r.bundle.slotting) << ',' << to_string(r.bundle.sequencing) << ','
     << to_string(r.bundle.batching) << ',' << to_string(r.bundle.layout) << ',' << r.seed << ','
     << r.orders_offered << ',' << r.orders_completed << ',' << r.orders_in_progress << ','
     << r.orders_never_started << ',' << r.travel_meters << ',' << r.planned_travel_meters << ','
     << r.total_time << ',' << r.utilization << ',' << r.parallelism << '\n';
  return os.str();
}

} // namespace wsdo
