#include "wsdo/nhatc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>

#include "wsdo/error.hpp"
#include "wsdo/warehouse_graph.hpp"

namespace wsdo {

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Quadratic test node: min sum (x_i - center_i)^2 plus penalties, where each
// link reads the slice of x listed under params.links[id].
NodeOutput solve_quadratic(const NodeSpec& spec, const NodeInput& in, double tol) {
  const Vector center = vector_from_json(spec.params.at("center"));
  const auto n = center.size();
  std::map<std::string, std::vector<Eigen::Index>> slices;
  if (spec.params.contains("links"))
    for (const auto& [id, idx] : spec.params.at("links").items())
      slices[id] = idx.get<std::vector<Eigen::Index>>();
  for (const auto& l : in.links)
    if (!slices.count(l.id)) throw InvalidArgument("quadratic node " + spec.id + " has no slice for link " + l.id);

  auto gather = [&](const Vector& x, const std::string& id) {
    const auto& idx = slices.at(id);
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = x(idx[i]);
    return out;
  };
  auto local = [center](const Vector& x) { return (x - center).squaredNorm(); };

  NlpProblem p;
  p.dimension = static_cast<int>(n);
  p.objective = [&](const Vector& x) {
    double f = local(x);
    for (const auto& l : in.links) f += link_penalty(l, gather(x, l.id));
    return f;
  };
  p.gradient = [&](const Vector& x) {
    Vector g = 2.0 * (x - center);
    for (const auto& l : in.links) {
      const Vector d = link_penalty_gradient(l, gather(x, l.id));
      const auto& idx = slices.at(l.id);
      for (std::size_t i = 0; i < idx.size(); ++i) g(idx[i]) += d(static_cast<Eigen::Index>(i));
    }
    return g;
  };
  const auto r = sqp_solve(p, center, tol);

  NodeOutput out;
  out.node = spec.id;
  for (const auto& l : in.links) out.values[l.id] = gather(r.x, l.id);
  out.objective = local(r.x);
  out.augmented = r.objective;
  if (r.status == NlpStatus::infeasible) out.status = "infeasible";
  out.detail = {{"x", vector_to_json(r.x)},
                {"solver_status", to_string(r.status)},
                {"kkt_residual", r.kkt_residual}};
  return out;
}

struct ReportOptions {
  std::vector<std::string> skip = {"wall_time_s", "location", "solve_log", "dispatch_events"};
};

bool equivalent(const json& a, const json& b, double tol, const std::string& path, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = path + ": " + msg;
    return false;
  };
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    if (std::isnan(x) && std::isnan(y)) return true;
    if (x == y) return true;
    if (std::abs(x - y) <= tol) return true;
    return fail(a.dump() + " vs " + b.dump());
  }
  if (a.type() != b.type()) return fail("type mismatch");
  if (a.is_object()) {
    static const ReportOptions opts;
    for (const auto& [k, va] : a.items()) {
      if (std::find(opts.skip.begin(), opts.skip.end(), k) != opts.skip.end()) continue;
      if (!b.contains(k)) return fail("missing key " + k);
      if (!equivalent(va, b.at(k), tol, path + "/" + k, why)) return false;
    }
    for (const auto& [k, vb] : b.items())
      if (std::find(opts.skip.begin(), opts.skip.end(), k) == opts.skip.end() && !a.contains(k))
        return fail("missing key " + k);
    return true;
  }
  if (a.is_array()) {
    if (a.size() != b.size()) return fail("array length");
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!equivalent(a[i], b[i], tol, path + "/" + std::to_string(i), why)) return false;
    return true;
  }
  return a == b ? true : fail(a.dump() + " vs " + b.dump());
}

} // namespace

const NodeSpec& NhatcGraph::node(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return n;
  throw InvalidArgument("no node " + id);
}

const LinkSpec& NhatcGraph::link(const std::string& id) const {
  for (const auto& l : links)
    if (l.id == id) return l;
  throw InvalidArgument("no link " + id);
}

void validate_graph(const NhatcGraph& graph) {
  std::set<std::string> ids, lids;
  for (const auto& n : graph.nodes)
    if (!ids.insert(n.id).second) throw InvalidArgument("duplicate node id " + n.id);
  for (const auto& l : graph.links) {
    if (!lids.insert(l.id).second) throw InvalidArgument("duplicate link id " + l.id);
    if (!ids.count(l.target) || !ids.count(l.response))
      throw InvalidArgument("link " + l.id + " references an unknown node");
    if (l.target == l.response) throw InvalidArgument("link " + l.id + " joins a node to itself");
    if (l.init_t.size() != l.init_r.size() || l.init_t.size() == 0)
      throw InvalidArgument("link " + l.id + " has mismatched target/response sizes");
  }
}

const LinkInput* NodeInput::find(const std::string& id) const {
  for (const auto& l : links)
    if (l.id == id) return &l;
  return nullptr;
}

const LinkInput& NodeInput::at(const std::string& id) const {
  if (const auto* l = find(id)) return *l;
  throw InvalidArgument("node input lacks link " + id);
}

double phi(const Vector& c, const Vector& v, const Vector& w) {
  if (c.size() != v.size() || c.size() != w.size())
    throw InvalidArgument("penalty dimension mismatch");
  return v.dot(c) + w.cwiseProduct(c).squaredNorm();
}

double augment_objective(double f, const std::vector<CouplingState>& links) {
  for (const auto& l : links) {
    if (l.t.size() != l.r.size()) throw InvalidArgument("target/response dimension mismatch");
    f += phi(l.c(), l.v, l.w);
  }
  return f;
}

double link_penalty(const LinkInput& link, const Vector& own) {
  if (own.size() != link.neighbor.size()) throw InvalidArgument("link " + link.id + " dimension mismatch");
  const Vector c = link.side == LinkSide::target ? Vector(own - link.neighbor) : Vector(link.neighbor - own);
  return phi(c, link.v, link.w);
}

Vector link_penalty_gradient(const LinkInput& link, const Vector& own) {
  const bool tgt = link.side == LinkSide::target;
  const Vector c = tgt ? Vector(own - link.neighbor) : Vector(link.neighbor - own);
  const Vector d = link.v + 2.0 * link.w.cwiseProduct(link.w).cwiseProduct(c);
  return tgt ? d : Vector(-d);
}

const std::map<std::string, NodeSolver>& solver_registry() {
  static const std::map<std::string, NodeSolver> registry{
      {"quadratic", solve_quadratic},
      {"layout", solve_layout_node},
      {"routing", solve_routing_node},
      {"slotting", solve_slotting_node},
      {"reassignment", solve_reassignment_node},
      {"classification", solve_classification_node},
  };
  return registry;
}

std::vector<std::string> solver_kinds() {
  std::vector<std::string> out;
  for (const auto& [k, s] : solver_registry()) out.push_back(k);
  return out;
}

NodeOutput solve_node(const NodeSpec& node, const NodeInput& input, double tol) {
  auto it = solver_registry().find(node.kind);
  if (it == solver_registry().end()) throw InvalidArgument("unknown node kind " + node.kind);
  try {
    NodeOutput out = it->second(node, input, tol);
    out.node = node.id;
    return out;
  } catch (const InfeasibleError& e) {
    NodeOutput out;
    out.node = node.id;
    out.status = "infeasible";
    out.message = e.what();
    return out;
  }
}

ActiveSet configure_active_set(const NhatcGraph& graph, const std::set<std::string>& active,
                               const std::map<std::string, Vector>& frozen) {
  if (active.empty()) throw ConfigError("active set is empty");
  for (const auto& id : active) {
    bool known = false;
    for (const auto& n : graph.nodes) known = known || n.id == id;
    if (!known) throw ConfigError("unknown node in active set: " + id);
  }
  ActiveSet out;
  out.active = active;
  for (const auto& l : graph.links) {
    const bool ta = active.count(l.target) > 0, ra = active.count(l.response) > 0;
    if (ta == ra) continue;
    auto it = frozen.find(l.id);
    if (it == frozen.end()) throw ConfigError("link " + l.id + " needs a frozen value");
    if (it->second.size() != l.init_t.size())
      throw ConfigError("frozen value for link " + l.id + " has the wrong size");
    out.frozen[l.id] = it->second;
  }
  return out;
}

ActiveSet all_active(const NhatcGraph& graph) {
  std::set<std::string> ids;
  for (const auto& n : graph.nodes) ids.insert(n.id);
  return configure_active_set(graph, ids, {});
}

ActiveSet active_with_initial_freeze(const NhatcGraph& graph, const std::set<std::string>& active) {
  std::map<std::string, Vector> frozen;
  for (const auto& l : graph.links) {
    if (!active.count(l.target)) frozen[l.id] = l.init_t;
    else if (!active.count(l.response)) frozen[l.id] = l.init_r;
  }
  return configure_active_set(graph, active, frozen);
}

std::vector<NodeOutput> dispatch_local(const std::vector<SolveRequest>& requests) {
  std::vector<std::future<NodeOutput>> jobs;
  for (const auto& r : requests)
    jobs.push_back(std::async(std::launch::async, [&r] { return solve_node(*r.node, r.input, r.tol); }));
  std::vector<NodeOutput> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

std::string to_string(NhatcStatus status) {
  return status == NhatcStatus::converged ? "converged" : "max-outer";
}

NhatcResult nhatc_solve(const NhatcGraph& graph, const ActiveSet& active, const NhatcOptions& options,
                        const Dispatcher& dispatch) {
  validate_graph(graph);
  if (!(options.tol_c > 0)) throw InvalidArgument("tol_c must be positive");
  if (options.max_outer < 1) throw InvalidArgument("max_outer must be at least 1");
  const auto t0 = std::chrono::steady_clock::now();
  const double inner_tol = options.inner_tol > 0 ? options.inner_tol : std::max(1e-13, 1e-3 * options.tol_c);

  auto is_active = [&](const std::string& id) { return active.active.count(id) > 0; };
  std::map<std::string, CouplingState> state;
  std::vector<const LinkSpec*> coupled; // both ends active: these drive convergence
  for (const auto& l : graph.links) {
    CouplingState s;
    if (!is_active(l.target) && !is_active(l.response)) {
      s.t = l.init_t;
      s.r = l.init_r;
    } else {
      s.t = is_active(l.target) ? l.init_t : active.frozen.at(l.id);
      s.r = is_active(l.response) ? l.init_r : active.frozen.at(l.id);
    }
    s.v = Vector::Zero(l.init_t.size());
    s.w = Vector::Ones(l.init_t.size());
    state[l.id] = s;
    if (is_active(l.target) && is_active(l.response)) coupled.push_back(&l);
  }

  std::vector<const NodeSpec*> nodes;
  for (const auto& n : graph.nodes)
    if (is_active(n.id)) nodes.push_back(&n);

  auto input_for = [&](const NodeSpec& n) {
    NodeInput in;
    for (const auto& l : graph.links) {
      if (l.target != n.id && l.response != n.id) continue;
      const auto& s = state.at(l.id);
      LinkInput li;
      li.id = l.id;
      li.side = l.target == n.id ? LinkSide::target : LinkSide::response;
      li.neighbor = li.side == LinkSide::target ? s.r : s.t;
      li.v = s.v;
      li.w = s.w;
      in.links.push_back(std::move(li));
    }
    return in;
  };

  std::map<std::string, NodeOutput> memo;
  std::map<std::string, NodeOutput> outputs;
  json history = json::array();
  json solve_log = json::array();
  std::map<std::string, Vector> c_prev;

  NhatcResult best;
  double best_c = INFINITY;
  NhatcResult result;

  for (int it = 1; it <= options.max_outer; ++it) {
    int sweeps = 0;
    for (; sweeps < options.max_inner;) {
      ++sweeps;
      std::vector<SolveRequest> due;
      std::vector<std::string> keys;
      std::vector<NodeOutput> sweep(nodes.size());
      std::vector<int> slot;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        SolveRequest req{nodes[i], input_for(*nodes[i]), options.solve_tol};
        std::string key = nodes[i]->id + "\n" + json(req.input).dump();
        auto hit = options.memoize ? memo.find(key) : memo.end();
        if (hit != memo.end()) {
          sweep[i] = hit->second;
          sweep[i].location = "cache";
        } else {
          due.push_back(std::move(req));
          keys.push_back(std::move(key));
          slot.push_back(static_cast<int>(i));
        }
      }
      const auto solved = due.empty() ? std::vector<NodeOutput>{} : dispatch(due);
      if (solved.size() != due.size()) throw ProtocolError("dispatcher returned the wrong number of results");
      for (std::size_t j = 0; j < solved.size(); ++j) {
        sweep[static_cast<std::size_t>(slot[j])] = solved[j];
        if (options.memoize) memo[keys[j]] = solved[j];
      }

      // Jacobi update: every node saw the previous sweep's values.
      double change = 0.0;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        NodeOutput& o = sweep[i];
        solve_log.push_back({{"iteration", it}, {"sweep", sweeps}, {"node", o.node}, {"location", o.location}});
        if (o.status != "ok") {
          // Keep the previous iterate of a node whose local solve failed.
          auto prev = outputs.find(o.node);
          if (prev != outputs.end()) {
            NodeOutput kept = prev->second;
            kept.status = o.status;
            kept.message = o.message;
            outputs[o.node] = kept;
          } else {
            outputs[o.node] = o;
          }
          continue;
        }
        for (const auto& [lid, val] : o.values) {
          const auto& l = graph.link(lid);
          auto& s = state.at(lid);
          Vector& slotv = l.target == o.node ? s.t : s.r;
          if (slotv.size() != val.size()) throw InvalidArgument("node " + o.node + " sent a wrongly sized value on " + lid);
          change = std::max(change, inf_norm(slotv - val));
          slotv = val;
        }
        outputs[o.node] = o;
      }
      if (change <= inner_tol) break;
    }

    double c_inf = 0.0;
    json links = json::object();
    for (const LinkSpec* l : coupled) {
      const auto& s = state.at(l->id);
      const Vector c = s.c();
      c_inf = std::max(c_inf, inf_norm(c));
      links[l->id] = {{"c", vector_to_json(c)}, {"v", vector_to_json(s.v)}, {"w", vector_to_json(s.w)}};
    }
    json objectives = json::object();
    for (const auto& [id, o] : outputs) objectives[id] = {{"objective", o.objective}, {"augmented", o.augmented}, {"status", o.status}};
    history.push_back({{"iteration", it}, {"c_inf", c_inf}, {"inner_sweeps", sweeps}, {"links", links}, {"objectives", objectives}});

    result.iterations = it;
    result.c_inf = c_inf;
    result.links = state;
    result.outputs = outputs;
    if (c_inf < best_c) {
      best_c = c_inf;
      best = result;
    }
    if (c_inf <= options.tol_c) {
      result.status = NhatcStatus::converged;
      break;
    }
    for (const LinkSpec* l : coupled) {
      auto& s = state.at(l->id);
      const Vector c = s.c();
      s.v += 2.0 * s.w.cwiseProduct(s.w).cwiseProduct(c);
      auto prev = c_prev.find(l->id);
      if (prev != c_prev.end())
        for (Eigen::Index e = 0; e < c.size(); ++e)
          if (std::abs(c(e)) > options.gamma * std::abs(prev->second(e))) s.w(e) *= options.beta;
      c_prev[l->id] = c;
    }
  }

  if (result.status != NhatcStatus::converged) {
    const int last = result.iterations;
    result = best;
    result.status = NhatcStatus::max_outer;
    result.iterations = last;
  }

  json final_links = json::object();
  for (const auto& [id, s] : result.links)
    final_links[id] = {{"t", vector_to_json(s.t)}, {"r", vector_to_json(s.r)}, {"c", vector_to_json(s.c())},
                       {"coupled", is_active(graph.link(id).target) && is_active(graph.link(id).response)}};
  json final_nodes = json::object();
  for (const auto& [id, o] : result.outputs)
    final_nodes[id] = {{"objective", o.objective}, {"augmented", o.augmented}, {"status", o.status}, {"detail", o.detail}};
  json active_ids = json::array();
  for (const auto& n : nodes) active_ids.push_back(n->id);

  result.report = {
      {"status", to_string(result.status)},
      {"outer_iterations", result.iterations},
      {"c_inf", result.c_inf},
      {"tol_c", options.tol_c},
      {"max_outer", options.max_outer},
      {"beta", options.beta},
      {"gamma", options.gamma},
      {"active", active_ids},
      {"history", history},
      {"final", {{"links", final_links}, {"nodes", final_nodes}}},
      {"solve_log", solve_log},
      {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
  };
  return result;
}

NhatcGraph two_node_toy(double a, double b) {
  NhatcGraph g;
  g.nodes.push_back({"P1", "quadratic", {{"center", {a}}, {"links", {{"z", {0}}}}}});
  g.nodes.push_back({"P2", "quadratic", {{"center", {b}}, {"links", {{"z", {0}}}}}});
  g.links.push_back({"z", "P1", "P2", Vector::Zero(1), Vector::Zero(1)});
  return g;
}

bool reports_equivalent(const json& a, const json& b, double tol, std::string* why) {
  return equivalent(a, b, tol, "", why);
}

json vector_to_json(const Vector& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw InvalidArgument("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

void to_json(json& j, const NodeSpec& n) { j = {{"id", n.id}, {"kind", n.kind}, {"params", n.params}}; }

void from_json(const json& j, NodeSpec& n) {
  n.id = j.at("id").get<std::string>();
  n.kind = j.at("kind").get<std::string>();
  n.params = j.value("params", json::object());
}

void to_json(json& j, const LinkInput& l) {
  j = {{"id", l.id},
       {"side", l.side == LinkSide::target ? "target" : "response"},
       {"neighbor", vector_to_json(l.neighbor)},
       {"v", vector_to_json(l.v)},
       {"w", vector_to_json(l.w)}};
}

void from_json(const json& j, LinkInput& l) {
  l.id = j.at("id").get<std::string>();
  const auto side = j.at("side").get<std::string>();
  if (side != "target" && side != "response") throw InvalidArgument("bad link side " + side);
  l.side = side == "target" ? LinkSide::target : LinkSide::response;
  l.neighbor = vector_from_json(j.at("neighbor"));
  l.v = vector_from_json(j.at("v"));
  l.w = vector_from_json(j.at("w"));
}

void to_json(json& j, const NodeInput& in) { j = {{"links", in.links}}; }
void from_json(const json& j, NodeInput& in) { in.links = j.at("links").get<std::vector<LinkInput>>(); }

void to_json(json& j, const NodeOutput& out) {
  json values = json::object();
  for (const auto& [k, v] : out.values) values[k] = vector_to_json(v);
  j = {{"node", out.node},         {"values", values},   {"objective", out.objective},
       {"augmented", out.augmented}, {"status", out.status}, {"message", out.message},
       {"detail", out.detail},     {"location", out.location}};
}

void from_json(const json& j, NodeOutput& out) {
  out.node = j.at("node").get<std::string>();
  out.values.clear();
  for (const auto& [k, v] : j.at("values").items()) out.values[k] = vector_from_json(v);
  out.objective = j.at("objective").get<double>();
  out.augmented = j.at("augmented").get<double>();
  out.status = j.at("status").get<std::string>();
  out.message = j.value("message", "");
  out.detail = j.value("detail", json::object());
  out.location = j.value("location", "local");
}

} // namespace wsdo
