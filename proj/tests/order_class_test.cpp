#include <cmath>
#include <set>

#include "doctest.h"
#include "wsdo/error.hpp"
#include "wsdo/order_class.hpp"
#include "wsdo/rng.hpp"

using namespace wsdo;

namespace {

Sample sample(double a, double b, int label, std::int64_t ts = 0) {
  Sample s;
  s.x = Vector(2);
  s.x << a, b;
  s.label = label;
  s.timestamp = ts;
  return s;
}

std::vector<Sample> toy() {
  return {sample(0, 0, 0, 1), sample(0, 1, 0, 2), sample(5, 5, 1, 3), sample(5, 6, 1, 4)};
}

// Two well separated blobs around (1, 1) and (4, 4).
std::vector<Sample> stream(Rng& rng, int n, std::int64_t ts0) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(2));
    const double c = label == 0 ? 1.0 : 4.0;
    out.push_back(sample(c + rng.uniform() - 0.5, c + rng.uniform() - 0.5, label, ts0 + i));
  }
  return out;
}

Clustering four_clusters() {
  Clustering c;
  c.k = 4;
  c.product_ids = {"A", "B", "C", "D"};
  c.labels = {0, 1, 2, 3};
  return c;
}

SlotAssignment slots_for(const Clustering& c) {
  SlotAssignment a;
  for (std::size_t i = 0; i < c.product_ids.size(); ++i) a[c.product_ids[i]] = {0, static_cast<int>(i)};
  return a;
}

} // namespace

TEST_CASE("featurize_order examples") {
  const auto c = four_clusters();
  const auto a = slots_for(c);
  const Order one{"O1", 0, {{"C", 1}, {"C", 1}, {"C", 1}}};
  const auto f = featurize_order(one, c, a);
  CHECK(f.size() == 5);
  CHECK(f(0) == 0.0);
  CHECK(f(2) == 1.0);
  CHECK(f(4) == 3.0);

  const Order split{"O2", 0, {{"A", 2}, {"B", 2}}};
  const auto g = featurize_order(split, c, a);
  CHECK(g(0) == 0.5);
  CHECK(g(1) == 0.5);
  CHECK(g(2) == 0.0);

  const Order same{"O3", 99, {{"A", 2}, {"B", 2}}};
  CHECK(featurize_order(same, c, a) == g);

  const Order unknown{"O4", 0, {{"Z", 1}}};
  CHECK_THROWS_AS(featurize_order(unknown, c, a), InvalidArgument);
}

TEST_CASE("scaling quantities keeps the feature block and the prediction") {
  const Instance inst = generate_instance(5, GenParams{});
  const auto clust = kmeans_cluster(product_features(inst.catalog, inst.history), 4, 5);
  const auto samples = bootstrap_samples(inst.history, clust, inst.assignment);
  const auto model = svm_train(samples, 1.0, 20, 5);
  for (std::size_t i = 0; i < 50; ++i) {
    Order o = inst.history[i];
    const auto before = featurize_order(o, clust, inst.assignment);
    for (auto& l : o.lines) l.quantity *= 3;
    const auto after = featurize_order(o, clust, inst.assignment);
    CHECK((before - after).lpNorm<Eigen::Infinity>() <= 1e-15);
    CHECK(model.predict(before) == model.predict(after));
  }
}

TEST_CASE("separable toy set is learned exactly") {
  // Oracle: a separating line exists; find one on a grid of directions and offsets.
  const auto data = toy();
  bool separable = false;
  for (int k = 0; k < 360 && !separable; ++k) {
    const double th = k * M_PI / 180.0;
    for (double b = -10; b <= 10 && !separable; b += 0.25) {
      double margin = INFINITY;
      for (const auto& s : data) {
        const double y = s.label == 1 ? 1.0 : -1.0;
        margin = std::min(margin, y * (std::cos(th) * s.x(0) + std::sin(th) * s.x(1) + b));
      }
      separable = margin > 0;
    }
  }
  REQUIRE(separable);
  const auto m = svm_train(data, 1.0, 200, 1);
  CHECK(svm_accuracy(m, data) == 1.0);
}

TEST_CASE("duplicated samples keep training-set predictions") {
  auto data = toy();
  const auto m1 = svm_train(data, 1.0, 200, 3);
  auto doubled = data;
  doubled.insert(doubled.end(), data.begin(), data.end());
  const auto m2 = svm_train(doubled, 1.0, 200, 3);
  for (const auto& s : data) CHECK(m1.predict(s.x) == m2.predict(s.x));
}

TEST_CASE("returned model is no worse than the zero initializer") {
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    std::vector<Sample> data;
    for (int i = 0; i < 30; ++i)
      data.push_back(sample(rng.uniform() * 4, rng.uniform() * 4, static_cast<int>(rng.below(3))));
    data[0].label = 0;
    data[1].label = 1;
    const auto m = svm_train(data, 0.5, 5, static_cast<std::uint64_t>(t));
    SvmModel zero = m;
    zero.weights.setZero();
    zero.bias.setZero();
    CHECK(svm_objective(m, data) <= svm_objective(zero, data) + 1e-12);
  }
}

TEST_CASE("training is deterministic and rejects degenerate labels") {
  const auto a = svm_train(toy(), 1.0, 50, 4);
  const auto b = svm_train(toy(), 1.0, 50, 4);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
  std::vector<Sample> one{sample(0, 0, 3), sample(1, 1, 3)};
  CHECK_THROWS_AS(svm_train(one, 1.0, 10, 0), InvalidArgument);
  CHECK_THROWS_AS(svm_train(toy(), 0.0, 10, 0), InvalidArgument);
}

TEST_CASE("prediction ties go to the smallest label") {
  SvmModel m;
  m.labels = {2, 5};
  m.weights = Matrix::Zero(2, 2);
  m.bias = Vector::Zero(2);
  CHECK(m.predict(Vector::Zero(2)) == 2);
}

TEST_CASE("window update: no-op, FIFO eviction and accuracy against a full retrain") {
  Rng rng(21);
  const auto first = stream(rng, 20, 0);
  const auto model = svm_train(first, 1.0, 30, 2, 20);
  SampleWindow window{20, {first.begin(), first.end()}};

  SUBCASE("empty batch") {
    const auto [m, w] = svm_update(model, window, {});
    CHECK(m.weights == model.weights);
    CHECK(w.samples.size() == window.samples.size());
  }
  SUBCASE("two new samples evict the two oldest") {
    SampleWindow small{4, {first.begin(), first.begin() + 4}};
    const auto add = stream(rng, 2, 100);
    const auto [m, w] = svm_update(model, small, add);
    REQUIRE(w.samples.size() == 4);
    CHECK(w.samples[0].timestamp == first[2].timestamp);
    CHECK(w.samples[3].timestamp == 101);
  }
  SUBCASE("stream of updates") {
    SvmModel m = model;
    SampleWindow w = window;
    for (int step = 0; step < 6; ++step) {
      std::tie(m, w) = svm_update(m, w, stream(rng, 5, 1000 + 10 * step));
      const auto data = w.contents();
      const double acc = svm_accuracy(m, data);
      const double scratch = svm_accuracy(svm_train(data, 1.0, 30, 2, 20), data);
      CHECK(acc >= 0.9);
      CHECK(std::abs(acc - scratch) <= 0.02);
      CHECK(m.oldest_timestamp == data.front().timestamp);
    }
  }
  SUBCASE("unseen category extends the label set") {
    std::vector<Sample> add{sample(9, 0, 7, 500), sample(9, 1, 7, 501)};
    const auto [m, w] = svm_update(model, window, add);
    CHECK(m.labels == std::vector<int>{0, 1, 7});
  }
}

TEST_CASE("parallelism limit") {
  SimParams p;
  p.max_carts = 3;
  p.cart_width = 1.0;
  CHECK(parallelism_limit({2.4, 3.0, 5.0}, p) == 2);
  p.max_carts = 1;
  CHECK(parallelism_limit({2.4}, p) == 1);
  p.max_carts = 4;
  CHECK_THROWS_AS(parallelism_limit({2.4, 0.9}, p), InfeasibleError);
}

TEST_CASE("picklists: batching, coverage and carts") {
  const auto c = four_clusters();
  const auto a = slots_for(c);
  SvmModel m;
  m.labels = {0, 1};
  m.weights = Matrix::Zero(2, 5);
  m.bias = Vector::Zero(2);
  m.weights(1, 1) = 1.0; // category 1 iff the order holds items of cluster 1
  SimParams p;
  p.max_carts = 4;

  SUBCASE("empty input") {
    CHECK(build_picklists({}, m, c, a, {2.4, 2.4}, p).batches.empty());
  }
  SUBCASE("one category, 12 orders, cap 5") {
    std::vector<Order> orders;
    for (int i = 0; i < 12; ++i) orders.push_back({"O" + std::to_string(100 + i), 12 - i, {{"A", 1}, {"C", 1}}});
    const auto pl = build_picklists(orders, m, c, a, {2.4, 2.4}, p);
    REQUIRE(pl.batches.size() == 3);
    CHECK(pl.batches[0].order_ids.size() == 5);
    CHECK(pl.batches[1].order_ids.size() == 5);
    CHECK(pl.batches[2].order_ids.size() == 2);
    CHECK(pl.batches[0].order_ids.front() == "O111"); // earliest timestamp first
    CHECK(pl.batches[0].visits == std::vector<SlotId>{{0, 0}, {0, 2}});
    CHECK(pl.parallelism == 2);
    for (const auto& b : pl.batches) CHECK(b.cart < pl.parallelism);
  }
  SUBCASE("mixed categories are grouped and every order appears once") {
    Rng rng(2);
    std::vector<Order> orders;
    const std::vector<std::string> ids{"A", "B", "C", "D"};
    for (int i = 0; i < 23; ++i) {
      Order o{"O" + std::to_string(i), static_cast<std::int64_t>(rng.below(100)), {}};
      o.lines.push_back({ids[rng.below(4)], 1});
      orders.push_back(o);
    }
    const auto pl = build_picklists(orders, m, c, a, {2.4, 2.4}, p, 3);
    std::multiset<std::string> seen;
    int last_cat = -1;
    for (const auto& b : pl.batches) {
      CHECK(b.order_ids.size() <= 3);
      CHECK(b.category >= last_cat);
      last_cat = b.category;
      seen.insert(b.order_ids.begin(), b.order_ids.end());
    }
    CHECK(seen.size() == orders.size());
    CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == orders.size());
  }
  SUBCASE("an aisle narrower than a cart") {
    CHECK_THROWS_AS(build_picklists({}, m, c, a, {2.4, 0.5}, p), InfeasibleError);
  }
}

TEST_CASE("model snapshot round-trips exactly") {
  const auto m = svm_train(toy(), 0.7, 40, 9, 16);
  const json j = m;
  const SvmModel back = json::parse(j.dump()).get<SvmModel>();
  CHECK(back.labels == m.labels);
  CHECK(back.weights == m.weights);
  CHECK(back.bias == m.bias);
  CHECK(back.window_capacity == 16);
  CHECK(back.newest_timestamp == 4);
}
