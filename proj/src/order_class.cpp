#include "wsdo/order_class.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "wsdo/error.hpp"
#include "wsdo/rng.hpp"

namespace wsdo {

namespace {

// Augmented sample: features followed by the constant 1 that carries the bias.
Vector augment(const Vector& x) {
  Vector a(x.size() + 1);
  a.head(x.size()) = x;
  a(x.size()) = 1.0;
  return a;
}

double class_objective(const Vector& w, const std::vector<Vector>& xs, const std::vector<double>& ys,
                       double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) hinge += std::max(0.0, 1.0 - ys[i] * w.dot(xs[i]));
  return 0.5 * lambda * w.squaredNorm() + hinge / static_cast<double>(xs.size());
}

SvmModel train(const std::vector<Sample>& samples, const std::vector<int>& labels, double C,
               int epochs, std::uint64_t seed, const Matrix& w0, const Vector& b0, long t0) {
  const std::size_t n = samples.size();
  const Eigen::Index dim = samples.front().x.size();
  const double lambda = 1.0 / (C * static_cast<double>(n));
  std::vector<Vector> xs;
  for (const auto& s : samples) {
    if (s.x.size() != dim) throw InvalidArgument("samples have differing feature dimensions");
    xs.push_back(augment(s.x));
  }

  SvmModel m;
  m.labels = labels;
  m.C = C;
  m.epochs = epochs;
  m.seed = seed;
  m.weights = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), dim);
  m.bias = Vector::Zero(static_cast<Eigen::Index>(labels.size()));

  for (std::size_t c = 0; c < labels.size(); ++c) {
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = samples[i].label == labels[c] ? 1.0 : -1.0;
    Vector w(dim + 1);
    w.head(dim) = w0.row(static_cast<Eigen::Index>(c)).transpose();
    w(dim) = b0(static_cast<Eigen::Index>(c));
    Vector best = w;
    double best_obj = class_objective(w, xs, ys, lambda);

    // Each class gets its own shuffle stream so label order does not matter.
    Rng rng(seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(labels[c]) + 1));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    long t = t0;
    for (int e = 0; e < epochs; ++e) {
      rng.shuffle(order);
      for (std::size_t i : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double margin = ys[i] * w.dot(xs[i]);
        w *= 1.0 - eta * lambda;
        if (margin < 1.0) w += eta * ys[i] * xs[i];
      }
      const double obj = class_objective(w, xs, ys, lambda);
      if (obj < best_obj) {
        best_obj = obj;
        best = w;
      }
    }
    m.weights.row(static_cast<Eigen::Index>(c)) = best.head(dim).transpose();
    m.bias(static_cast<Eigen::Index>(c)) = best(dim);
  }

  auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    return a.timestamp < b.timestamp;
  });
  m.oldest_timestamp = lo->timestamp;
  m.newest_timestamp = hi->timestamp;
  return m;
}

std::vector<int> label_set(const std::vector<Sample>& samples) {
  std::set<int> s;
  for (const auto& x : samples) s.insert(x.label);
  return {s.begin(), s.end()};
}

} // namespace

OrderFeatures featurize_order(const Order& order, const std::map<std::string, int>& cluster_of,
                              int k) {
  OrderFeatures f = Vector::Zero(k + 1);
  double total = 0.0;
  for (const auto& l : order.lines) {
    auto it = cluster_of.find(l.product_id);
    if (it == cluster_of.end())
      throw InvalidArgument("order " + order.id + " has unclustered product " + l.product_id);
    f(it->second) += l.quantity;
    total += l.quantity;
  }
  if (total > 0) f.head(k) /= total;
  f(k) = static_cast<double>(order.lines.size());
  return f;
}

OrderFeatures featurize_order(const Order& order, const Clustering& clustering,
                              const SlotAssignment& assignment) {
  for (const auto& l : order.lines)
    if (!assignment.count(l.product_id))
      throw InvalidArgument("order " + order.id + " has unslotted product " + l.product_id);
  return featurize_order(order, clustering.cluster_of(), clustering.k);
}

int dominant_cluster(const OrderFeatures& features) {
  Eigen::Index best = 0;
  features.head(features.size() - 1).maxCoeff(&best);
  return static_cast<int>(best);
}

std::vector<Sample> bootstrap_samples(const std::vector<Order>& orders,
                                      const Clustering& clustering,
                                      const SlotAssignment& assignment) {
  const auto cl = clustering.cluster_of();
  std::vector<Sample> out;
  for (const auto& o : orders) {
    for (const auto& l : o.lines)
      if (!assignment.count(l.product_id))
        throw InvalidArgument("order " + o.id + " has unslotted product " + l.product_id);
    Sample s;
    s.x = featurize_order(o, cl, clustering.k);
    s.label = dominant_cluster(s.x);
    s.timestamp = o.timestamp;
    s.order_id = o.id;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> SvmModel::scores(const OrderFeatures& x) const {
  std::vector<double> out;
  for (Eigen::Index c = 0; c < weights.rows(); ++c) out.push_back(weights.row(c).dot(x) + bias(c));
  return out;
}

int SvmModel::predict(const OrderFeatures& x) const {
  const auto s = scores(x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < s.size(); ++c)
    if (s[c] > s[best]) best = c;
  return labels[best];
}

double svm_objective(const SvmModel& model, const std::vector<Sample>& samples) {
  const double lambda = 1.0 / (model.C * static_cast<double>(samples.size()));
  std::vector<Vector> xs;
  for (const auto& s : samples) xs.push_back(augment(s.x));
  double total = 0.0;
  for (std::size_t c = 0; c < model.labels.size(); ++c) {
    std::vector<double> ys;
    for (const auto& s : samples) ys.push_back(s.label == model.labels[c] ? 1.0 : -1.0);
    Vector w(model.weights.cols() + 1);
    w.head(model.weights.cols()) = model.weights.row(static_cast<Eigen::Index>(c)).transpose();
    w(model.weights.cols()) = model.bias(static_cast<Eigen::Index>(c));
    total += class_objective(w, xs, ys, lambda);
  }
  return total;
}

double svm_accuracy(const SvmModel& model, const std::vector<Sample>& samples) {
  if (samples.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& s : samples) hit += model.predict(s.x) == s.label;
  return static_cast<double>(hit) / static_cast<double>(samples.size());
}

SvmModel svm_train(const std::vector<Sample>& samples, double C, int epochs, std::uint64_t seed,
                   std::size_t window_capacity) {
  if (!(C > 0)) throw InvalidArgument("C must be positive");
  if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
  const auto labels = label_set(samples);
  if (labels.size() < 2) throw InvalidArgument("degenerate labels: need at least two categories");
  const auto dim = samples.front().x.size();
  const auto k = static_cast<Eigen::Index>(labels.size());
  SvmModel m = train(samples, labels, C, epochs, seed, Matrix::Zero(k, dim), Vector::Zero(k), 0);
  m.window_capacity = window_capacity == 0 ? samples.size() : window_capacity;
  return m;
}

std::pair<SvmModel, SampleWindow> svm_update(const SvmModel& model, const SampleWindow& window,
                                             const std::vector<Sample>& new_batch) {
  if (new_batch.empty()) return {model, window};
  SampleWindow w = window;
  if (w.capacity == 0) w.capacity = model.window_capacity;
  for (const auto& s : new_batch) {
    w.samples.push_back(s);
    while (w.samples.size() > w.capacity) w.samples.pop_front();
  }
  const auto data = w.contents();

  std::set<int> merged(model.labels.begin(), model.labels.end());
  for (const auto& s : data) merged.insert(s.label);
  const std::vector<int> labels(merged.begin(), merged.end());
  const Eigen::Index dim = data.front().x.size();
  Matrix w0 = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), dim);
  Vector b0 = Vector::Zero(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto it = std::find(model.labels.begin(), model.labels.end(), labels[c]);
    if (it == model.labels.end() || model.weights.cols() != dim) continue;
    const auto src = static_cast<Eigen::Index>(it - model.labels.begin());
    w0.row(static_cast<Eigen::Index>(c)) = model.weights.row(src);
    b0(static_cast<Eigen::Index>(c)) = model.bias(src);
  }
  SvmModel m = train(data, labels, model.C, model.epochs, model.seed, w0, b0,
                     static_cast<long>(w.capacity));
  m.window_capacity = w.capacity;
  return {std::move(m), std::move(w)};
}

int parallelism_limit(const std::vector<double>& aisle_widths, const SimParams& params) {
  if (!(params.cart_width > 0)) throw InvalidArgument("cart width must be positive");
  long p = params.max_carts;
  for (double a : aisle_widths) p = std::min(p, static_cast<long>(std::floor(a / params.cart_width)));
  if (p <= 0)
    throw InfeasibleError("an aisle is narrower than a cart, no picker can operate in parallel");
  return static_cast<int>(p);
}

Picklists build_picklists(const std::vector<Order>& orders, const SvmModel& model,
                          const Clustering& clustering, const SlotAssignment& assignment,
                          const std::vector<double>& aisle_widths, const SimParams& params,
                          int batch_cap) {
  if (batch_cap < 1) throw InvalidArgument("batch cap must be at least 1");
  Picklists out;
  out.parallelism = parallelism_limit(aisle_widths, params);
  if (orders.empty()) return out;

  const auto cl = clustering.cluster_of();
  std::map<int, std::vector<const Order*>> by_category;
  for (const auto& o : orders) by_category[model.predict(featurize_order(o, cl, clustering.k))].push_back(&o);

  for (auto& [category, members] : by_category) {
    std::stable_sort(members.begin(), members.end(), [](const Order* a, const Order* b) {
      return a->timestamp != b->timestamp ? a->timestamp < b->timestamp : a->id < b->id;
    });
    for (std::size_t start = 0; start < members.size(); start += static_cast<std::size_t>(batch_cap)) {
      PickBatch b;
      b.id = static_cast<int>(out.batches.size());
      b.category = category;
      b.cart = b.id % out.parallelism;
      std::set<SlotId> seen;
      const std::size_t end = std::min(members.size(), start + static_cast<std::size_t>(batch_cap));
      for (std::size_t i = start; i < end; ++i) {
        b.order_ids.push_back(members[i]->id);
        for (const auto& l : members[i]->lines) {
          auto it = assignment.find(l.product_id);
          if (it == assignment.end())
            throw InvalidArgument("order " + members[i]->id + " has unslotted product " + l.product_id);
          if (seen.insert(it->second).second) b.visits.push_back(it->second);
        }
      }
      out.batches.push_back(std::move(b));
    }
  }
  return out;
}

void to_json(json& j, const SvmModel& m) {
  json w = json::array();
  for (Eigen::Index c = 0; c < m.weights.rows(); ++c) {
    std::vector<double> row(static_cast<std::size_t>(m.weights.cols()));
    for (Eigen::Index d = 0; d < m.weights.cols(); ++d) row[static_cast<std::size_t>(d)] = m.weights(c, d);
    w.push_back(row);
  }
  j = json{{"labels", m.labels},
           {"weights", w},
           {"bias", std::vector<double>(m.bias.data(), m.bias.data() + m.bias.size())},
           {"C", m.C},
           {"epochs", m.epochs},
           {"seed", m.seed},
           {"window", {{"capacity", m.window_capacity},
                       {"oldest_timestamp", m.oldest_timestamp},
                       {"newest_timestamp", m.newest_timestamp}}}};
}

void from_json(const json& j, SvmModel& m) {
  m.labels = j.at("labels").get<std::vector<int>>();
  const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
  const auto bias = j.at("bias").get<std::vector<double>>();
  if (rows.size() != m.labels.size() || bias.size() != m.labels.size())
    throw InvalidArgument("model weights do not match its labels");
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  m.weights.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    if (rows[c].size() != dim) throw InvalidArgument("ragged model weights");
    for (std::size_t d = 0; d < dim; ++d)
      m.weights(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d)) = rows[c][d];
  }
  m.bias = Eigen::Map<const Vector>(bias.data(), static_cast<Eigen::Index>(bias.size()));
  m.C = j.at("C").get<double>();
  m.epochs = j.at("epochs").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& w = j.at("window");
  m.window_capacity = w.at("capacity").get<std::size_t>();
  m.oldest_timestamp = w.at("oldest_timestamp").get<std::int64_t>();
  m.newest_timestamp = w.at("newest_timestamp").get<std::int64_t>();
}

} // namespace wsdo
