#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "doctest.h"
#include "wsdo/error.hpp"
#include "wsdo/rng.hpp"
#include "wsdo/slotting.hpp"

using namespace wsdo;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

// Smallest within-cluster sum of squares over every labelling into exactly k
// non-empty groups.
double brute_force_inertia(const Matrix& pts, int k) {
  const int n = static_cast<int>(pts.rows());
  std::vector<int> lab(static_cast<std::size_t>(n), 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::set<int> used(lab.begin(), lab.end());
    if (static_cast<int>(used.size()) == k) {
      double total = 0;
      for (int c = 0; c < k; ++c) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(pts.cols());
        int cnt = 0;
        for (int i = 0; i < n; ++i)
          if (lab[static_cast<std::size_t>(i)] == c) {
            mean += pts.row(i);
            ++cnt;
          }
        mean /= cnt;
        for (int i = 0; i < n; ++i)
          if (lab[static_cast<std::size_t>(i)] == c) total += (pts.row(i) - mean).squaredNorm();
      }
      best = std::min(best, total);
    }
    int i = 0;
    while (i < n && ++lab[static_cast<std::size_t>(i)] == k) lab[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  return best;
}

Layout small_layout() {
  LayoutTemplate t;
  t.rows = 2;
  t.slots_per_row = 6;
  t.row_length = 6.0;
  t.aisle_width = 2.0;
  t.cross_aisle = 2.0;
  return make_layout(t);
}

} // namespace

TEST_CASE("1-D fixture splits into the two obvious groups") {
  const Matrix pts = column({0.0, 0.1, 10.0, 10.1});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = kmeans(pts, 2, seed);
    CHECK(c.labels[0] == c.labels[1]);
    CHECK(c.labels[2] == c.labels[3]);
    CHECK(c.labels[0] != c.labels[2]);
    CHECK(c.inertia == doctest::Approx(brute_force_inertia(pts, 2)).epsilon(1e-12));
  }
}

TEST_CASE("inertia never increases across Lloyd iterations") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    Matrix pts(60, 3);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      for (Eigen::Index j = 0; j < 3; ++j) pts(i, j) = rng.uniform() * 10;
    const auto c = kmeans(pts, 2 + t % 5, static_cast<std::uint64_t>(t));
    for (std::size_t i = 1; i < c.inertia_history.size(); ++i)
      CHECK(c.inertia_history[i] <= c.inertia_history[i - 1] + 1e-9);
  }
}

TEST_CASE("k-means never beats and, on separated groups, matches exhaustive search") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    Matrix pts(7, 2);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      for (Eigen::Index j = 0; j < 2; ++j) pts(i, j) = rng.uniform();
    CHECK(kmeans(pts, 2, static_cast<std::uint64_t>(t)).inertia >= brute_force_inertia(pts, 2) - 1e-12);

    // Shift three points far away: the optimal split is then unambiguous.
    Matrix sep = pts;
    for (Eigen::Index i = 0; i < 3; ++i) sep(i, 0) += 50.0;
    const auto c = kmeans(sep, 2, static_cast<std::uint64_t>(t));
    CHECK(c.inertia == doctest::Approx(brute_force_inertia(sep, 2)).epsilon(1e-12));
  }
}

TEST_CASE("k equal to n puts every point alone") {
  const Matrix pts = column({4.0, 1.0, 9.0, 2.5, 7.0});
  const auto c = kmeans(pts, 5, 1);
  CHECK(std::set<int>(c.labels.begin(), c.labels.end()).size() == 5);
  CHECK(c.inertia == 0.0);
  CHECK_THROWS_AS(kmeans(pts, 6, 1), InvalidArgument);
  CHECK_THROWS_AS(kmeans(pts, 0, 1), InvalidArgument);
}

TEST_CASE("duplicate points with k = n trigger a reseed without crashing") {
  const Matrix pts = column({1.0, 1.0, 1.0, 5.0});
  const auto c = kmeans(pts, 3, 2);
  CHECK(c.labels.size() == 4);
  CHECK(c.inertia == 0.0);
}

TEST_CASE("converged clustering is a fixpoint") {
  Rng rng(5);
  Matrix pts(80, 2);
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (Eigen::Index j = 0; j < 2; ++j) pts(i, j) = rng.uniform() * 5;
  const auto c = kmeans(pts, 4, 8);
  const auto again = kmeans_refine(pts, c);
  CHECK(again.labels == c.labels);
  CHECK((again.centroids - c.centroids).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(again.iterations == 1);
}

TEST_CASE("same seed, same clustering") {
  const Instance inst = generate_instance(21, GenParams{});
  const auto f = product_features(inst.catalog, inst.history);
  const auto a = kmeans_cluster(f, 4, 99);
  const auto b = kmeans_cluster(f, 4, 99);
  CHECK(a.labels == b.labels);
  CHECK(a.cluster_of().size() == inst.catalog.size());
}

TEST_CASE("product features: raw values and standardisation") {
  std::vector<Product> catalog{{"A", 1}, {"B", 2}, {"C", 3}};
  std::vector<Order> hist{
      {"O1", 0, {{"A", 1}, {"B", 2}}},
      {"O2", 1, {{"A", 1}}},
  };
  const auto f = product_features(catalog, hist);
  CHECK(f.raw(0, 0) == 2.0);
  CHECK(f.raw(1, 0) == 1.0);
  CHECK(f.raw(2, 0) == 0.0);
  CHECK(f.raw(0, 1) == 1.5);
  CHECK(f.raw(1, 1) == 2.0);
  CHECK(f.raw(0, 2) == 0.5);
  CHECK(f.raw(2, 2) == 0.0);
  for (Eigen::Index c = 0; c < 3; ++c) {
    CHECK(std::abs(f.values.col(c).mean()) < 1e-12);
    CHECK((f.values.col(c).array().square().mean()) == doctest::Approx(1.0));
  }
  hist.push_back({"O3", 2, {{"Z", 1}}});
  CHECK_THROWS_AS(product_features(catalog, hist), InvalidArgument);
}

TEST_CASE("assign_slots is a bijection and puts hot clusters near the depot") {
  const Layout layout = small_layout();
  const RouteGraph g = build_route_graph(layout, 0.5);
  std::vector<Order> hist;
  // Product i is picked (6 - i) times.
  std::vector<std::string> ids{"P1", "P2", "P3", "P4", "P5", "P6"};
  int oid = 0;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t r = 0; r < 6 - i; ++r) hist.push_back({"O" + std::to_string(oid++), oid, {{ids[i], 1}}});

  Clustering c;
  c.k = 2;
  c.product_ids = ids;
  c.labels = {1, 1, 1, 0, 0, 0};
  const auto a = assign_slots(c, layout, g, hist);
  std::set<SlotId> used;
  for (const auto& [p, s] : a) used.insert(s);
  CHECK(used.size() == ids.size());

  // Oracle: with hot products already in frequency order, any permutation of
  // the six nearest slots can only match or worsen the weighted distance.
  const auto dist = slot_depot_distances(layout, g);
  const auto freq = pick_frequency(hist);
  auto score = [&](const SlotAssignment& s) {
    double t = 0;
    for (const auto& [p, slot] : s) t += freq.at(p) * dist[slot_index(layout, slot)];
    return t;
  };
  const double got = score(a);
  std::vector<SlotId> chosen;
  for (const auto& id : ids) chosen.push_back(a.at(id));
  std::sort(chosen.begin(), chosen.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    SlotAssignment trial;
    for (std::size_t i = 0; i < ids.size(); ++i) trial[ids[i]] = chosen[i];
    best = std::min(best, score(trial));
  } while (std::next_permutation(chosen.begin(), chosen.end()));
  CHECK(got == doctest::Approx(best));
  // Cluster 1 holds the hottest products, so its members take the nearest slots.
  for (int hot = 0; hot < 3; ++hot)
    for (int cold = 3; cold < 6; ++cold)
      CHECK(dist[slot_index(layout, a.at(ids[static_cast<std::size_t>(hot)]))] <=
            dist[slot_index(layout, a.at(ids[static_cast<std::size_t>(cold)]))]);
}

TEST_CASE("assign_slots refuses when products outnumber slots") {
  const Layout layout = small_layout();
  const RouteGraph g = build_route_graph(layout, 0.5);
  Clustering c;
  c.k = 1;
  for (int i = 0; i < 13; ++i) {
    c.product_ids.push_back("P" + std::to_string(i));
    c.labels.push_back(0);
  }
  CHECK_THROWS_AS(assign_slots(c, layout, g, {}), CapacityError);
}

TEST_CASE("clustered slotting beats the random assignment on the default instance") {
  const Instance inst = generate_instance(7, GenParams{});
  const RouteGraph g = build_route_graph(inst.layout, inst.params.cell_size);
  const auto f = product_features(inst.catalog, inst.history);
  const auto c = kmeans_cluster(f, 4, 7);
  const auto a = assign_slots(c, inst.layout, g, inst.history);
  CHECK(weighted_depot_distance(a, inst.layout, g, inst.history) <
        weighted_depot_distance(inst.assignment, inst.layout, g, inst.history));
}

TEST_CASE("reassignment gating") {
  const Layout layout = small_layout();
  const RouteGraph g = build_route_graph(layout, 0.5);
  const auto dist = slot_depot_distances(layout, g);
  const auto slots = all_slots(layout);
  std::vector<std::size_t> by_dist(slots.size());
  for (std::size_t i = 0; i < by_dist.size(); ++i) by_dist[i] = i;
  std::stable_sort(by_dist.begin(), by_dist.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  const SlotId near = slots[by_dist.front()], far = slots[by_dist.back()];
  REQUIRE(dist[by_dist.front()] < dist[by_dist.back()]);

  std::vector<Order> hist{{"O1", 0, {{"A", 1}}}, {"O2", 1, {{"A", 1}}}};
  const SlotAssignment current{{"A", far}};
  const SlotAssignment proposed{{"A", near}};

  SUBCASE("zero budget accepts nothing") {
    const auto plan = evaluate_reassignment(current, proposed, hist, layout, g, 1.0, 0.0);
    REQUIRE(plan.moves.size() == 1);
    CHECK_FALSE(plan.moves[0].accepted);
    CHECK(plan.moves[0].reason == "over_budget");
    CHECK(apply_plan(current, plan) == current);
  }
  SUBCASE("enough budget accepts the improving move") {
    const auto plan = evaluate_reassignment(current, proposed, hist, layout, g, 1.0, 5.0);
    REQUIRE(plan.accepted_count == 1);
    CHECK(plan.moves[0].benefit ==
          doctest::Approx(2 * (dist[by_dist.back()] - dist[by_dist.front()])));
    CHECK(apply_plan(current, plan) == proposed);
  }
  SUBCASE("a worsening move is never accepted") {
    const auto plan = evaluate_reassignment(proposed, current, hist, layout, g, 1.0, 100.0);
    CHECK(plan.accepted_count == 0);
    CHECK(plan.moves[0].reason == "non_positive_benefit");
  }
  SUBCASE("a target held by a product that stays put is occupied") {
    const SlotAssignment cur2{{"A", far}, {"B", near}};
    const SlotAssignment prop2{{"A", near}, {"B", near}};
    const auto plan = evaluate_reassignment(cur2, prop2, hist, layout, g, 1.0, 100.0);
    CHECK(plan.accepted_count == 0);
    CHECK(plan.moves[0].reason == "slot_occupied");
  }
}

TEST_CASE("greedy plan stays within the exhaustive subset optimum") {
  const Layout layout = small_layout();
  const RouteGraph g = build_route_graph(layout, 0.5);
  const auto slots = all_slots(layout);
  const auto dist = slot_depot_distances(layout, g);
  Rng rng(12);
  int exact = 0;
  for (int t = 0; t < 40; ++t) {
    // Six products on a random half of the slots, proposals on the other half.
    std::vector<SlotId> pool = slots;
    rng.shuffle(pool);
    SlotAssignment cur, prop;
    std::vector<Order> hist;
    for (int i = 0; i < 6; ++i) {
      const std::string p = "P" + std::to_string(i);
      cur[p] = pool[static_cast<std::size_t>(i)];
      prop[p] = pool[static_cast<std::size_t>(6 + i)];
      const auto reps = 1 + rng.below(5);
      for (std::uint64_t r = 0; r < reps; ++r)
        hist.push_back({"O" + std::to_string(hist.size()), 0, {{p, 1}}});
    }
    const double budget = static_cast<double>(rng.below(7));
    const auto plan = evaluate_reassignment(cur, prop, hist, layout, g, 1.0, budget);
    CHECK(plan.total_cost <= budget);

    // Oracle over every subset of moves with cost within budget.
    const auto freq = pick_frequency(hist);
    std::vector<double> benefit;
    for (int i = 0; i < 6; ++i) {
      const std::string p = "P" + std::to_string(i);
      benefit.push_back(freq.at(p) * (dist[slot_index(layout, cur[p])] - dist[slot_index(layout, prop[p])]));
    }
    double best = 0;
    for (int mask = 0; mask < 64; ++mask) {
      if (__builtin_popcount(static_cast<unsigned>(mask)) > budget) continue;
      double b = 0;
      for (int i = 0; i < 6; ++i)
        if (mask & (1 << i)) b += benefit[static_cast<std::size_t>(i)];
      best = std::max(best, b);
    }
    CHECK(plan.total_benefit <= best + 1e-9);
    // Targets are disjoint from the current slots, so unit costs make greedy exact.
    if (std::abs(plan.total_benefit - best) <= 1e-9) ++exact;

    const auto after = apply_plan(cur, plan);
    std::set<SlotId> used;
    for (const auto& [p, s] : after) used.insert(s);
    CHECK(used.size() == after.size());
  }
  CHECK(exact == 40);
}
