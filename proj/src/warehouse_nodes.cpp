#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

#include "wsdo/error.hpp"
#include "wsdo/layout_opt.hpp"
#include "wsdo/order_class.hpp"
#include "wsdo/route_graph.hpp"
#include "wsdo/routing.hpp"
#include "wsdo/slotting.hpp"
#include "wsdo/warehouse_graph.hpp"

namespace wsdo {

namespace {

struct Context {
  Instance instance;
  WarehouseOptions options;
};

Context context(const NodeSpec& spec) {
  Context c;
  c.instance = spec.params.at("instance").get<Instance>();
  c.options = spec.params.value("options", json::object()).get<WarehouseOptions>();
  return c;
}

int cluster_count(const Context& c) {
  return c.options.clusters > 0 ? c.options.clusters : static_cast<int>(c.instance.layout.rack_rows.size());
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// The neighbour's value on a link, or `fallback` when the node is not wired to it.
Vector neighbor_or(const NodeInput& in, const std::string& link, const Vector& fallback) {
  const auto* l = in.find(link);
  return l ? l->neighbor : fallback;
}

// Discrete nodes take incoming targets as their responses.
void adopt(NodeOutput& out, const NodeInput& in, const std::string& link, const Vector& value) {
  if (const auto* l = in.find(link); l && l->side == LinkSide::response) out.values[link] = value;
}

void emit(NodeOutput& out, const NodeInput& in, const std::string& link, const Vector& value) {
  if (const auto* l = in.find(link); l && l->side == LinkSide::target) out.values[link] = value;
}

// Penalty total over the links this node holds, for reporting.
double penalty_total(const NodeInput& in, const NodeOutput& out) {
  double p = 0.0;
  for (const auto& l : in.links) {
    auto it = out.values.find(l.id);
    if (it != out.values.end()) p += link_penalty(l, it->second);
  }
  return p;
}

Clustering clustering_from_labels(const Instance& inst, const Vector& labels, int k) {
  Clustering c;
  c.k = k;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const int lab = static_cast<int>(std::lround(labels(i)));
    if (lab < 0 || lab >= k) throw InvalidArgument("cluster label out of range");
    c.labels.push_back(lab);
    c.product_ids.push_back(inst.catalog[static_cast<std::size_t>(i)].id);
  }
  return c;
}

Clustering cluster_products(const Context& c) {
  return kmeans_cluster(product_features(c.instance.catalog, c.instance.history), cluster_count(c),
                        c.options.seed);
}

} // namespace

void to_json(json& j, const WarehouseOptions& o) {
  j = {{"seed", o.seed},           {"clusters", o.clusters},     {"move_cost", o.move_cost},
       {"budget", o.budget},       {"min_aisle", o.min_aisle},   {"svm_c", o.svm_c},
       {"svm_epochs", o.svm_epochs}, {"batch_cap", o.batch_cap}};
}

void from_json(const json& j, WarehouseOptions& o) {
  const WarehouseOptions d;
  o.seed = j.value("seed", d.seed);
  o.clusters = j.value("clusters", d.clusters);
  o.move_cost = j.value("move_cost", d.move_cost);
  o.budget = j.value("budget", d.budget);
  o.min_aisle = j.value("min_aisle", d.min_aisle);
  o.svm_c = j.value("svm_c", d.svm_c);
  o.svm_epochs = j.value("svm_epochs", d.svm_epochs);
  o.batch_cap = j.value("batch_cap", d.batch_cap);
}

Vector slots_vector(const Instance& instance, const SlotAssignment& assignment) {
  Vector v(static_cast<Eigen::Index>(instance.catalog.size()));
  for (std::size_t i = 0; i < instance.catalog.size(); ++i) {
    auto it = assignment.find(instance.catalog[i].id);
    if (it == assignment.end()) throw InvalidArgument("product " + instance.catalog[i].id + " has no slot");
    v(static_cast<Eigen::Index>(i)) = static_cast<double>(slot_index(instance.layout, it->second));
  }
  return v;
}

SlotAssignment assignment_from_vector(const Instance& instance, const Vector& slots) {
  if (static_cast<std::size_t>(slots.size()) != instance.catalog.size())
    throw InvalidArgument("slot vector does not match the catalog");
  const auto all = all_slots(instance.layout);
  SlotAssignment out;
  std::set<long> used;
  for (std::size_t i = 0; i < instance.catalog.size(); ++i) {
    const long s = std::lround(slots(static_cast<Eigen::Index>(i)));
    if (s < 0 || static_cast<std::size_t>(s) >= all.size()) throw InvalidArgument("slot index out of range");
    if (!used.insert(s).second) throw InvalidArgument("two products share a slot");
    out[instance.catalog[i].id] = all[static_cast<std::size_t>(s)];
  }
  return out;
}

HistoryRouting route_history(const Instance& instance, const Layout& layout,
                             const SlotAssignment& assignment) {
  const RouteGraph g = build_route_graph(layout, instance.params.cell_size);
  DistanceCache cache(g);
  std::vector<Route> routes;
  HistoryRouting out;
  for (const auto& o : instance.history) {
    std::vector<SlotId> picks;
    for (const auto& l : o.lines) picks.push_back(assignment.at(l.product_id));
    routes.push_back(optimize_pick_sequence(g, g.depot_node, picks, {}, &cache));
    out.total_distance += routes.back().total_distance;
    out.route_hours += route_time(routes.back(), instance.params) / 3600.0;
  }
  out.pick_rates = picking_frequency(routes, instance.params).mean_vector(layout.aisle_widths.size());
  return out;
}

NhatcGraph warehouse_graph(const Instance& instance, const WarehouseOptions& options) {
  validate_instance(instance);
  NhatcGraph g;
  json params = {{"instance", instance}, {"options", options}};
  for (const auto& id : kWarehouseNodes) g.nodes.push_back({id, id, params});

  Context c{instance, options};
  const Vector widths = to_vector(instance.layout.aisle_widths);
  const Vector slots = slots_vector(instance, instance.assignment);
  const Clustering clusters = cluster_products(c);
  Vector labels(static_cast<Eigen::Index>(clusters.labels.size()));
  for (std::size_t i = 0; i < clusters.labels.size(); ++i) labels(static_cast<Eigen::Index>(i)) = clusters.labels[i];
  const Vector rates = to_vector(route_history(instance, instance.layout, instance.assignment).pick_rates);

  g.links.push_back({"aisle_widths", "layout", "routing", widths, widths});
  g.links.push_back({"pick_rate", "routing", "layout", rates, rates});
  g.links.push_back({"widths_class", "layout", "classification", widths, widths});
  g.links.push_back({"proposed_slots", "slotting", "reassignment", slots, slots});
  g.links.push_back({"slots_routing", "reassignment", "routing", slots, slots});
  g.links.push_back({"slots_class", "reassignment", "classification", slots, slots});
  g.links.push_back({"cluster_labels", "slotting", "classification", labels, labels});
  return g;
}

// Widths a and a local copy of the pick rates; maximise relaxed utilization
// subject to the clearance rows and the floor depth.
LayoutNodeProblem layout_node_problem(const Instance& instance, const WarehouseOptions& options,
                                      const NodeInput& in) {
  const Layout& layout = instance.layout;
  const auto m = static_cast<Eigen::Index>(layout.aisle_widths.size());
  const RowTemplate t = row_template(layout);
  const double k = instance.params.clearance_coeff;
  double rows_depth = 0.0;
  for (const auto& r : layout.rack_rows) rows_depth += r.depth;
  const double floor_depth = layout.floor_depth;
  const double a_lb = options.min_aisle;
  const double a_ub = t.floor_depth - t.rack_depth;
  if (a_lb * static_cast<double>(m) + rows_depth > floor_depth + 1e-12)
    throw InfeasibleError("minimum aisle widths do not fit the floor depth");

  // Width receivers adopt whatever they are sent, so only the rate copy is
  // penalised; a width penalty would just anchor a to its previous value.
  std::optional<LinkInput> rate;
  if (const auto* l = in.find("pick_rate")) rate = *l;
  const double mult = t.rack_depth / t.floor_depth * (t.rack_depth - t.floor_depth);

  LayoutNodeProblem out;
  out.tmpl = t;
  out.aisles = m;
  NlpProblem& p = out.problem;
  p.dimension = static_cast<int>(2 * m);
  p.objective = [t, m, rate](const Vector& x) {
    return -relaxed_utilization(t, x.head(m).mean()) + (rate ? link_penalty(*rate, x.tail(m)) : 0.0);
  };
  p.gradient = [t, m, rate, mult](const Vector& x) {
    Vector g = Vector::Zero(2 * m);
    const double am = x.head(m).mean();
    g.head(m).setConstant(-mult / ((t.rack_depth + am) * (t.rack_depth + am)) / static_cast<double>(m));
    if (rate) g.tail(m) += link_penalty_gradient(*rate, x.tail(m));
    return g;
  };
  p.inequality_count = static_cast<int>(m + 1);
  p.inequalities = [m, k, rows_depth, floor_depth](const Vector& x) {
    Vector g(m + 1);
    g.head(m) = k * x.tail(m) - x.head(m);
    g(m) = x.head(m).sum() + rows_depth - floor_depth;
    return g;
  };
  p.inequality_jacobian = [m, k](const Vector&) {
    Matrix J = Matrix::Zero(m + 1, 2 * m);
    for (Eigen::Index i = 0; i < m; ++i) {
      J(i, i) = -1.0;
      J(i, m + i) = k;
      J(m, i) = 1.0;
    }
    return J;
  };
  p.lower = Vector(2 * m);
  p.upper = Vector(2 * m);
  p.lower.head(m).setConstant(a_lb);
  p.upper.head(m).setConstant(a_ub);
  p.lower.tail(m).setZero();
  p.upper.tail(m).setConstant(std::numeric_limits<double>::infinity());

  out.x0 = Vector(2 * m);
  out.x0.head(m) = to_vector(layout.aisle_widths).cwiseMax(a_lb).cwiseMin(a_ub);
  out.x0.tail(m) = neighbor_or(in, "pick_rate", Vector::Zero(m)).cwiseMax(0.0);
  return out;
}

NodeOutput solve_layout_node(const NodeSpec& spec, const NodeInput& in, double tol) {
  const Context c = context(spec);
  const LayoutNodeProblem lp = layout_node_problem(c.instance, c.options, in);
  const NlpProblem& p = lp.problem;
  const RowTemplate& t = lp.tmpl;
  const Eigen::Index m = lp.aisles;
  const Vector& x0 = lp.x0;
  const NlpResult r = sqp_solve(p, x0, tol);
  if (r.status == NlpStatus::infeasible) throw InfeasibleError("layout subproblem is infeasible");

  NodeOutput out;
  const Vector a = r.x.head(m), rates = r.x.tail(m);
  emit(out, in, "aisle_widths", a);
  emit(out, in, "widths_class", a);
  adopt(out, in, "pick_rate", rates);
  out.objective = -relaxed_utilization(t, a.mean());
  out.augmented = r.objective;
  out.detail = {{"aisle_widths", vector_to_json(a)},
                {"rate_copy", vector_to_json(rates)},
                {"utilization", relaxed_utilization(t, a.mean())},
                {"solver_status", to_string(r.status)},
                {"kkt_residual", r.kkt_residual},
                {"iterations", r.iterations}};
  return out;
}

NodeOutput solve_routing_node(const NodeSpec& spec, const NodeInput& in, double) {
  const Context c = context(spec);
  const Vector widths = neighbor_or(in, "aisle_widths", to_vector(c.instance.layout.aisle_widths));
  const Vector slots = neighbor_or(in, "slots_routing", slots_vector(c.instance, c.instance.assignment));
  const Layout layout = with_aisle_widths(c.instance.layout, to_std(widths));
  const HistoryRouting h = route_history(c.instance, layout, assignment_from_vector(c.instance, slots));

  NodeOutput out;
  adopt(out, in, "aisle_widths", widths);
  adopt(out, in, "slots_routing", slots);
  emit(out, in, "pick_rate", to_vector(h.pick_rates));
  out.objective = h.total_distance;
  out.augmented = out.objective + penalty_total(in, out);
  out.detail = {{"total_distance", h.total_distance},
                {"route_hours", h.route_hours},
                {"pick_rates", h.pick_rates},
                {"orders", c.instance.history.size()}};
  return out;
}

NodeOutput solve_slotting_node(const NodeSpec& spec, const NodeInput& in, double) {
  const Context c = context(spec);
  const Clustering clusters = cluster_products(c);
  const RouteGraph g = build_route_graph(c.instance.layout, c.instance.params.cell_size);
  const SlotAssignment proposed = assign_slots(clusters, c.instance.layout, g, c.instance.history);
  Vector labels(static_cast<Eigen::Index>(clusters.labels.size()));
  for (std::size_t i = 0; i < clusters.labels.size(); ++i) labels(static_cast<Eigen::Index>(i)) = clusters.labels[i];

  NodeOutput out;
  emit(out, in, "proposed_slots", slots_vector(c.instance, proposed));
  emit(out, in, "cluster_labels", labels);
  out.objective = weighted_depot_distance(proposed, c.instance.layout, g, c.instance.history);
  out.augmented = out.objective + penalty_total(in, out);
  out.detail = {{"k", clusters.k},
                {"inertia", clusters.inertia},
                {"kmeans_iterations", clusters.iterations},
                {"weighted_depot_distance", out.objective},
                {"baseline_weighted_depot_distance",
                 weighted_depot_distance(c.instance.assignment, c.instance.layout, g, c.instance.history)}};
  return out;
}

NodeOutput solve_reassignment_node(const NodeSpec& spec, const NodeInput& in, double) {
  const Context c = context(spec);
  const Vector current = slots_vector(c.instance, c.instance.assignment);
  const Vector proposed_v = neighbor_or(in, "proposed_slots", current);
  const RouteGraph g = build_route_graph(c.instance.layout, c.instance.params.cell_size);
  const ReassignmentPlan plan =
      evaluate_reassignment(c.instance.assignment, assignment_from_vector(c.instance, proposed_v),
                            c.instance.history, c.instance.layout, g, c.options.move_cost, c.options.budget);
  const SlotAssignment after = apply_plan(c.instance.assignment, plan);
  const Vector slots = slots_vector(c.instance, after);

  NodeOutput out;
  adopt(out, in, "proposed_slots", proposed_v);
  emit(out, in, "slots_routing", slots);
  emit(out, in, "slots_class", slots);
  out.objective = weighted_depot_distance(after, c.instance.layout, g, c.instance.history);
  out.augmented = out.objective + penalty_total(in, out);
  out.detail = {{"moves", plan.moves.size()},
                {"accepted", plan.accepted_count},
                {"total_benefit", plan.total_benefit},
                {"total_cost", plan.total_cost}};
  return out;
}

NodeOutput solve_classification_node(const NodeSpec& spec, const NodeInput& in, double) {
  const Context c = context(spec);
  const Vector widths = neighbor_or(in, "widths_class", to_vector(c.instance.layout.aisle_widths));
  const Vector slots = neighbor_or(in, "slots_class", slots_vector(c.instance, c.instance.assignment));
  const int k = cluster_count(c);
  Vector labels;
  if (const auto* l = in.find("cluster_labels")) {
    labels = l->neighbor;
  } else {
    const auto cl = cluster_products(c);
    labels = Vector(static_cast<Eigen::Index>(cl.labels.size()));
    for (std::size_t i = 0; i < cl.labels.size(); ++i) labels(static_cast<Eigen::Index>(i)) = cl.labels[i];
  }
  const int k_eff = std::max(k, labels.size() ? static_cast<int>(std::lround(labels.maxCoeff())) + 1 : 1);
  const Clustering clusters = clustering_from_labels(c.instance, labels, k_eff);
  const SlotAssignment assignment = assignment_from_vector(c.instance, slots);
  const auto samples = bootstrap_samples(c.instance.history, clusters, assignment);

  std::set<int> cats;
  for (const auto& s : samples) cats.insert(s.label);
  SvmModel model;
  if (cats.size() >= 2) {
    model = svm_train(samples, c.options.svm_c, c.options.svm_epochs, c.options.seed);
  } else {
    model.labels = {cats.empty() ? 0 : *cats.begin()};
    model.weights = Matrix::Zero(1, k_eff + 1);
    model.bias = Vector::Zero(1);
  }
  const Picklists pl = build_picklists(c.instance.history, model, clusters, assignment, to_std(widths),
                                       c.instance.params, c.options.batch_cap);

  NodeOutput out;
  adopt(out, in, "widths_class", widths);
  adopt(out, in, "slots_class", slots);
  adopt(out, in, "cluster_labels", labels);
  out.objective = static_cast<double>(pl.batches.size());
  out.augmented = out.objective + penalty_total(in, out);
  out.detail = {{"categories", model.labels},
                {"training_accuracy", svm_accuracy(model, samples)},
                {"batches", pl.batches.size()},
                {"parallelism", pl.parallelism}};
  return out;
}

} // namespace wsdo
