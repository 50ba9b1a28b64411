#include "wsdo/slotting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "wsdo/error.hpp"
#include "wsdo/rng.hpp"
#include "wsdo/routing.hpp"

namespace wsdo {

namespace {

double sq_dist(const Matrix& points, Eigen::Index i, const Matrix& centroids, Eigen::Index c) {
  return (points.row(i) - centroids.row(c)).squaredNorm();
}

// Nearest centroid, lowest index on ties; keep `current` unless strictly beaten.
int nearest(const Matrix& points, Eigen::Index i, const Matrix& centroids, int current) {
  int best = current >= 0 ? current : 0;
  double bd = sq_dist(points, i, centroids, best);
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = sq_dist(points, i, centroids, c);
    if (d < bd || (current < 0 && d == bd && c < best)) {
      bd = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

Matrix seed_plus_plus(const Matrix& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  Eigen::Index first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);
  chosen[static_cast<std::size_t>(first)] = true;
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = sq_dist(points, i, centroids, 0);
  for (int c = 1; c < k; ++c) {
    std::vector<double> cdf(d2.size());
    std::partial_sum(d2.begin(), d2.end(), cdf.begin());
    Eigen::Index pick = -1;
    if (cdf.back() > 0) {
      pick = static_cast<Eigen::Index>(rng.from_cdf(cdf));
    } else {
      for (Eigen::Index i = 0; i < n && pick < 0; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) pick = i;
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    centroids.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sq_dist(points, i, centroids, c));
  }
  return centroids;
}

Clustering lloyd(const Matrix& points, Clustering c) {
  const Eigen::Index n = points.rows();
  const int k = c.k;
  for (int it = 0; it < kKmeansMaxIter; ++it) {
    // Update step.
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(c.labels[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts[static_cast<std::size_t>(c.labels[static_cast<std::size_t>(i)])];
    }
    bool reseeded = false;
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        c.centroids.row(j) = sums.row(j) / counts[static_cast<std::size_t>(j)];
        continue;
      }
      Eigen::Index far = 0;
      double fd = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = sq_dist(points, i, c.centroids, c.labels[static_cast<std::size_t>(i)]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      c.centroids.row(j) = points.row(far);
      reseeded = true;
      ++c.reseeds;
    }
    // Assignment step.
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int cur = c.labels[static_cast<std::size_t>(i)];
      const int best = nearest(points, i, c.centroids, cur);
      if (best != cur) {
        c.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    c.inertia = inertia(points, c.labels, c.centroids);
    c.inertia_history.push_back(c.inertia);
    c.iterations = it + 1;
    if (!changed && !reseeded) break;
  }
  return c;
}

} // namespace

std::map<std::string, int> Clustering::cluster_of() const {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < product_ids.size(); ++i) out[product_ids[i]] = labels[i];
  return out;
}

double inertia(const Matrix& points, const std::vector<int>& labels, const Matrix& centroids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    total += sq_dist(points, i, centroids, labels[static_cast<std::size_t>(i)]);
  return total;
}

ProductFeatures product_features(const std::vector<Product>& catalog,
                                 const std::vector<Order>& history) {
  const auto n = static_cast<Eigen::Index>(catalog.size());
  std::map<std::string, Eigen::Index> row;
  for (Eigen::Index i = 0; i < n; ++i) row[catalog[static_cast<std::size_t>(i)].id] = i;

  std::vector<double> freq(static_cast<std::size_t>(n), 0.0), line_sum(static_cast<std::size_t>(n), 0.0);
  std::vector<std::set<Eigen::Index>> partners(static_cast<std::size_t>(n));
  for (const auto& o : history) {
    std::vector<Eigen::Index> rows;
    for (const auto& l : o.lines) {
      auto it = row.find(l.product_id);
      if (it == row.end()) throw InvalidArgument("order references unknown product " + l.product_id);
      rows.push_back(it->second);
    }
    for (Eigen::Index r : rows) {
      freq[static_cast<std::size_t>(r)] += 1.0;
      line_sum[static_cast<std::size_t>(r)] += static_cast<double>(o.lines.size());
      for (Eigen::Index q : rows)
        if (q != r) partners[static_cast<std::size_t>(r)].insert(q);
    }
  }

  ProductFeatures f;
  f.raw = Matrix::Zero(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    f.product_ids.push_back(catalog[u].id);
    f.raw(i, 0) = freq[u];
    f.raw(i, 1) = freq[u] > 0 ? line_sum[u] / freq[u] : 0.0;
    f.raw(i, 2) = n > 1 ? static_cast<double>(partners[u].size()) / static_cast<double>(n - 1) : 0.0;
  }
  f.values = f.raw;
  for (Eigen::Index c = 0; c < 3 && n > 0; ++c) {
    const double mean = f.raw.col(c).mean();
    const double var = (f.raw.col(c).array() - mean).square().mean();
    if (var > 0)
      f.values.col(c) = (f.raw.col(c).array() - mean) / std::sqrt(var);
    else
      f.values.col(c).setZero();
  }
  return f;
}

Clustering kmeans(const Matrix& points, int k, std::uint64_t seed) {
  if (k < 1 || k > points.rows())
    throw InvalidArgument("cluster count must lie in [1, number of points]");
  Rng rng(seed);
  Clustering c;
  c.k = k;
  c.centroids = seed_plus_plus(points, k, rng);
  c.labels.assign(static_cast<std::size_t>(points.rows()), -1);
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    c.labels[static_cast<std::size_t>(i)] = nearest(points, i, c.centroids, -1);
  c.inertia = inertia(points, c.labels, c.centroids);
  c.inertia_history.push_back(c.inertia);
  return lloyd(points, std::move(c));
}

Clustering kmeans_refine(const Matrix& points, const Clustering& start) {
  Clustering c = start;
  c.inertia_history.clear();
  c.iterations = 0;
  c.reseeds = 0;
  return lloyd(points, std::move(c));
}

Clustering kmeans_cluster(const ProductFeatures& features, int k, std::uint64_t seed) {
  Clustering c = kmeans(features.values, k, seed);
  c.product_ids = features.product_ids;
  return c;
}

std::vector<double> slot_depot_distances(const Layout& layout, const RouteGraph& graph) {
  const auto tree = dijkstra_distances(graph, graph.depot_node);
  std::vector<double> out;
  for (const SlotId s : all_slots(layout))
    out.push_back(tree[static_cast<std::size_t>(graph.pick_node_of(s))]);
  return out;
}

SlotAssignment assign_slots(const Clustering& clustering, const Layout& layout,
                            const RouteGraph& graph, const std::vector<Order>& history) {
  const auto slots = all_slots(layout);
  const std::size_t n = clustering.product_ids.size();
  if (slots.size() < n)
    throw CapacityError(std::to_string(n) + " products but only " + std::to_string(slots.size()) +
                        " slots");
  const auto freq = pick_frequency(history);
  auto f = [&](const std::string& id) {
    auto it = freq.find(id);
    return it == freq.end() ? 0.0 : it->second;
  };

  std::vector<double> cluster_total(static_cast<std::size_t>(clustering.k), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    cluster_total[static_cast<std::size_t>(clustering.labels[i])] += f(clustering.product_ids[i]);
  std::vector<int> order(static_cast<std::size_t>(clustering.k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return cluster_total[static_cast<std::size_t>(a)] > cluster_total[static_cast<std::size_t>(b)];
  });
  std::vector<int> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[static_cast<std::size_t>(order[r])] = static_cast<int>(r);

  std::vector<std::size_t> products(n);
  std::iota(products.begin(), products.end(), 0);
  std::sort(products.begin(), products.end(), [&](std::size_t a, std::size_t b) {
    const int ra = rank[static_cast<std::size_t>(clustering.labels[a])];
    const int rb = rank[static_cast<std::size_t>(clustering.labels[b])];
    if (ra != rb) return ra < rb;
    const double fa = f(clustering.product_ids[a]), fb = f(clustering.product_ids[b]);
    if (fa != fb) return fa > fb;
    return clustering.product_ids[a] < clustering.product_ids[b];
  });

  const auto dist = slot_depot_distances(layout, graph);
  std::vector<std::size_t> slot_order(slots.size());
  std::iota(slot_order.begin(), slot_order.end(), 0);
  std::stable_sort(slot_order.begin(), slot_order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

  SlotAssignment out;
  for (std::size_t i = 0; i < n; ++i) out[clustering.product_ids[products[i]]] = slots[slot_order[i]];
  return out;
}

double weighted_depot_distance(const SlotAssignment& assignment, const Layout& layout,
                               const RouteGraph& graph, const std::vector<Order>& history) {
  const auto dist = slot_depot_distances(layout, graph);
  double num = 0.0, den = 0.0;
  for (const auto& [pid, f] : pick_frequency(history)) {
    auto it = assignment.find(pid);
    if (it == assignment.end()) continue;
    num += f * dist[slot_index(layout, it->second)];
    den += f;
  }
  return den > 0 ? num / den : 0.0;
}

ReassignmentPlan evaluate_reassignment(const SlotAssignment& current,
                                       const SlotAssignment& proposed,
                                       const std::vector<Order>& history, const Layout& layout,
                                       const RouteGraph& graph, double move_cost, double budget) {
  if (!(move_cost > 0)) throw InvalidArgument("move cost must be positive");
  const auto dist = slot_depot_distances(layout, graph);
  const auto freq = pick_frequency(history);

  ReassignmentPlan plan;
  for (const auto& [pid, to] : proposed) {
    auto it = current.find(pid);
    if (it == current.end() || it->second == to) continue;
    Move m;
    m.product = pid;
    m.from = it->second;
    m.to = to;
    auto fi = freq.find(pid);
    const double f = fi == freq.end() ? 0.0 : fi->second;
    m.benefit = f * (dist[slot_index(layout, m.from)] - dist[slot_index(layout, m.to)]);
    m.cost = move_cost;
    plan.moves.push_back(std::move(m));
  }
  std::stable_sort(plan.moves.begin(), plan.moves.end(), [](const Move& a, const Move& b) {
    return a.benefit / a.cost > b.benefit / b.cost;
  });

  std::set<SlotId> occupied;
  for (const auto& [pid, slot] : current) occupied.insert(slot);
  for (Move& m : plan.moves) {
    if (m.benefit <= 0) {
      m.reason = "non_positive_benefit";
    } else if (plan.total_cost + m.cost > budget) {
      m.reason = "over_budget";
    } else if (occupied.count(m.to)) {
      m.reason = "slot_occupied";
    } else {
      m.accepted = true;
      m.reason = "accepted";
      occupied.erase(m.from);
      occupied.insert(m.to);
      plan.total_cost += m.cost;
      plan.total_benefit += m.benefit;
      ++plan.accepted_count;
    }
  }
  return plan;
}

SlotAssignment apply_plan(const SlotAssignment& current, const ReassignmentPlan& plan) {
  SlotAssignment out = current;
  for (const Move& m : plan.moves)
    if (m.accepted) out[m.product] = m.to;
  return out;
}

} // namespace wsdo
