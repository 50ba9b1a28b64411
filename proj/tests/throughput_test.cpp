#include <cmath>
#include <queue>

#include "doctest.h"
#include "wsdo/error.hpp"
#include "wsdo/route_graph.hpp"
#include "wsdo/routing.hpp"
#include "wsdo/throughput.hpp"

using namespace wsdo;

namespace {

// Breadth-first hop counts from the depot; every edge is one cell long.
std::vector<double> bfs_meters(const RouteGraph& g) {
  std::vector<int> hops(g.node_count(), -1);
  std::queue<int> q;
  hops[static_cast<std::size_t>(g.depot_node)] = 0;
  q.push(g.depot_node);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (const auto& e : g.adj[static_cast<std::size_t>(u)])
      if (hops[static_cast<std::size_t>(e.to)] < 0) {
        hops[static_cast<std::size_t>(e.to)] = hops[static_cast<std::size_t>(u)] + 1;
        q.push(e.to);
      }
  }
  std::vector<double> m;
  for (int h : hops) m.push_back(h * g.cell_size);
  return m;
}

std::vector<PolicyBundle> all_bundles() {
  std::vector<PolicyBundle> out;
  for (auto s : {SlottingPolicy::random, SlottingPolicy::clustered})
    for (auto q : {SequencingPolicy::given_order, SequencingPolicy::optimized})
      for (auto b : {BatchingPolicy::one_order_per_trip, BatchingPolicy::svm_batched})
        for (auto l : {LayoutPolicy::frozen, LayoutPolicy::optimized}) out.push_back({s, q, b, l});
  return out;
}

GenParams small_gen() {
  GenParams p;
  p.num_products = 60;
  p.num_orders = 120;
  p.layout.rows = 3;
  p.layout.slots_per_row = 30;
  p.layout.row_length = 15.0;
  return p;
}

} // namespace

TEST_CASE("zero orders: nothing completed, nothing travelled") {
  Instance inst = generate_instance(1, small_gen());
  inst.history.clear();
  for (const auto& b : all_bundles()) {
    const auto r = simulate_day(inst, b, 1);
    CHECK(r.orders_completed == 0);
    CHECK(r.travel_meters == 0.0);
    CHECK(r.planned_travel_meters == 0.0);
    for (const auto& c : r.carts) CHECK(c.idle == r.shift_seconds);
  }
}

TEST_CASE("single pick 10 m from the depot takes 25 s") {
  Instance inst = generate_instance(3, GenParams{});
  inst.params.picker_speed = 1.0;
  inst.params.handle_time = 5.0;
  const RouteGraph g = build_route_graph(inst.layout, inst.params.cell_size);
  const auto meters = bfs_meters(g);
  std::optional<SlotId> target;
  for (const SlotId s : all_slots(inst.layout))
    if (meters[static_cast<std::size_t>(g.pick_node_of(s))] == 10.0) {
      target = s;
      break;
    }
  REQUIRE(target);
  // Swap the target slot onto the first product.
  const std::string pid = inst.catalog[0].id;
  for (auto& [p, s] : inst.assignment)
    if (s == *target) s = inst.assignment[pid];
  inst.assignment[pid] = *target;
  inst.history = {{"o1", 0, {{pid, 1}}}};

  for (auto seq : {SequencingPolicy::given_order, SequencingPolicy::optimized}) {
    PolicyBundle b;
    b.sequencing = seq;
    const auto r = simulate_day(inst, b, 7);
    CHECK(r.orders_completed == 1);
    CHECK(r.travel_meters == 20.0);
    REQUIRE(r.carts[0].trips.size() == 1);
    CHECK(r.carts[0].trips[0].end == doctest::Approx(25.0).epsilon(1e-12));
  }
}

TEST_CASE("more carts never complete fewer orders") {
  GenParams gp = small_gen();
  gp.layout.aisle_width = 4.2;
  Instance inst = generate_instance(9, gp);
  inst.params.shift_length = 0.5; // more orders than the shift can absorb
  int prev = -1;
  for (int carts : {1, 2, 4}) {
    inst.params.max_carts = carts;
    const auto r = simulate_day(inst, PolicyBundle::baseline(), 9);
    CHECK(r.parallelism == carts);
    CHECK(r.orders_never_started + r.orders_in_progress > 0);
    CHECK(r.orders_completed >= prev);
    prev = r.orders_completed;
  }
}

TEST_CASE("conservation, time accounting and distance cross-check") {
  for (std::uint64_t seed : {11u, 12u}) {
    Instance inst = generate_instance(seed, small_gen());
    inst.params.shift_length = 0.4;
    for (const auto& b : all_bundles()) {
      const auto r = simulate_day(inst, b, seed);
      CHECK(r.orders_completed + r.orders_in_progress + r.orders_never_started == r.orders_offered);
      CHECK(r.orders_completed <= r.orders_offered);
      CHECK(static_cast<int>(r.carts.size()) == r.parallelism);
      double meters = 0.0;
      int trips = 0;
      for (const auto& c : r.carts) {
        CHECK(c.busy + c.idle == doctest::Approx(r.shift_seconds).epsilon(1e-12));
        CHECK(c.idle >= -1e-9);
        for (const auto& t : c.trips)
          if (t.completed) {
            meters += t.distance;
            ++trips;
          }
      }
      CHECK(r.travel_meters == doctest::Approx(meters).epsilon(1e-12));
      CHECK(r.trips_completed == trips);
    }
  }
}

TEST_CASE("baseline trip distances match the routing module") {
  Instance inst = generate_instance(21, small_gen());
  inst.params.shift_length = 0.5;
  const auto r = simulate_day(inst, PolicyBundle::baseline(), 21);
  const RouteGraph g = build_route_graph(inst.layout, inst.params.cell_size);
  std::map<std::string, const Order*> by_id;
  for (const auto& o : inst.history) by_id[o.id] = &o;
  double expected = 0.0;
  for (const auto& c : r.carts)
    for (const auto& t : c.trips) {
      REQUIRE(t.order_ids.size() == 1);
      std::vector<SlotId> picks;
      for (const auto& l : by_id.at(t.order_ids[0])->lines) picks.push_back(inst.assignment.at(l.product_id));
      const Route route = route_in_given_order(g, g.depot_node, picks);
      CHECK(t.distance == route.total_distance);
      if (t.completed) expected += route.total_distance;
    }
  CHECK(r.travel_meters == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("simulation is deterministic per seed") {
  const Instance inst = generate_instance(5, small_gen());
  for (const auto& b : {PolicyBundle::baseline(), PolicyBundle::optimized()})
    CHECK(json(simulate_day(inst, b, 5)).dump() == json(simulate_day(inst, b, 5)).dump());
}

TEST_CASE("identical bundles give zero improvement") {
  const Instance inst = generate_instance(6, small_gen());
  for (const auto& b : {PolicyBundle::baseline(), PolicyBundle::optimized()}) {
    const auto c = compare_policies(inst, b, b, 6);
    REQUIRE(c.improvement);
    CHECK(*c.improvement == 0.0);
  }
}

TEST_CASE("optimized sequencing never routes further than the given order") {
  for (std::uint64_t seed = 30; seed < 36; ++seed) {
    const Instance inst = generate_instance(seed, small_gen());
    for (auto batching : {BatchingPolicy::one_order_per_trip, BatchingPolicy::svm_batched}) {
      PolicyBundle given{SlottingPolicy::random, SequencingPolicy::given_order, batching, LayoutPolicy::frozen};
      PolicyBundle opt = given;
      opt.sequencing = SequencingPolicy::optimized;
      const auto c = compare_policies(inst, given, opt, seed);
      CHECK(c.optimized.planned_travel_meters <= c.baseline.planned_travel_meters + 1e-9);
    }
  }
}

TEST_CASE("default benchmark: optimized bundle lifts throughput by at least 20%") {
  const Instance inst = generate_instance(42, GenParams{});
  const auto c = compare_policies(inst, PolicyBundle::baseline(), PolicyBundle::optimized(), 42);
  REQUIRE(c.improvement);
  CHECK(*c.improvement >= 0.20);
  CHECK(c.optimized.planned_travel_meters <= c.baseline.planned_travel_meters);
}

TEST_CASE("degenerate runs") {
  Instance inst = generate_instance(8, small_gen());
  SUBCASE("no cart fits an aisle") {
    inst.params.cart_width = 100.0;
    CHECK_THROWS_AS(simulate_day(inst, PolicyBundle::baseline(), 8), InfeasibleError);
  }
  SUBCASE("baseline that completes nothing has no ratio") {
    inst.params.shift_length = 1e-6;
    const auto c = compare_policies(inst, PolicyBundle::baseline(), PolicyBundle::optimized(), 8);
    CHECK(c.baseline.orders_completed == 0);
    CHECK_FALSE(c.improvement.has_value());
    const json j = c;
    CHECK(j.at("improvement").is_null());
    CHECK(j.at("throughputs").at("baseline") == 0);
  }
}

TEST_CASE("policy bundle parsing") {
  const PolicyBundle b{SlottingPolicy::clustered, SequencingPolicy::given_order, BatchingPolicy::svm_batched,
                       LayoutPolicy::optimized};
  CHECK(json(b).get<PolicyBundle>() == b);
  CHECK(parse_bundle("clustered,given-order,svm-batched,optimized") == b);
  CHECK(parse_bundle("optimized") == PolicyBundle::optimized());
  json missing = b;
  missing.erase("layout");
  CHECK_THROWS_AS(missing.get<PolicyBundle>(), ConfigError);
  json extra = b;
  extra["layout2"] = "frozen";
  CHECK_THROWS_AS(extra.get<PolicyBundle>(), ConfigError);
  CHECK_THROWS_AS(parse_bundle("random,optimized"), ConfigError);
  CHECK_THROWS_AS(parse_bundle("random,optimized,svm,frozen"), ConfigError);
}

TEST_CASE("CSV rows line up with the header") {
  const Instance inst = generate_instance(2, small_gen());
  const auto r = simulate_day(inst, PolicyBundle::baseline(), 2);
  auto commas = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  CHECK(commas(csv_header()) == commas(csv_row("baseline", r)));
}
