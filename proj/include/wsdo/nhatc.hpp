#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "wsdo/core.hpp"
#include "wsdo/json_io.hpp"
#include "wsdo/sqp.hpp"

namespace wsdo {

// A subproblem. `kind` selects the solver from the registry; `params` carries
// everything the solver needs so the spec can be shipped to a remote worker.
struct NodeSpec {
  std::string id;
  std::string kind;
  json params = json::object();
};

// A coupling variable shared by two nodes. The target node owns t, the
// response node owns r, and c = t - r.
struct LinkSpec {
  std::string id;
  std::string target;
  std::string response;
  Vector init_t;
  Vector init_r;
};

struct NhatcGraph {
  std::vector<NodeSpec> nodes;
  std::vector<LinkSpec> links;

  const NodeSpec& node(const std::string& id) const;
  const LinkSpec& link(const std::string& id) const;
};

// Throws InvalidArgument on duplicate ids, dangling link endpoints, self
// links or mismatched t/r dimensions.
void validate_graph(const NhatcGraph& graph);

enum class LinkSide { target, response };

// What one node sees of one of its links during a solve.
struct LinkInput {
  std::string id;
  LinkSide side = LinkSide::target;
  Vector neighbor; // r when this node is the target side, t otherwise
  Vector v;
  Vector w;
};

struct NodeInput {
  std::vector<LinkInput> links;
  const LinkInput* find(const std::string& id) const;
  const LinkInput& at(const std::string& id) const;
};

struct NodeOutput {
  std::string node;
  std::map<std::string, Vector> values; // per link: t (target side) or r (response side)
  double objective = 0.0;               // local objective
  double augmented = 0.0;               // objective plus penalty
  std::string status = "ok";            // ok | infeasible
  std::string message;
  json detail = json::object();
  std::string location = "local";
};

// phi(c) = v'c + |w o c|^2. Throws InvalidArgument on dimension mismatch.
double phi(const Vector& c, const Vector& v, const Vector& w);

struct CouplingState {
  Vector t;
  Vector r;
  Vector v;
  Vector w;
  Vector c() const { return t - r; }
};

double augment_objective(double f, const std::vector<CouplingState>& links);

// Penalty seen by a node whose own contribution to the link is `own`.
double link_penalty(const LinkInput& link, const Vector& own);
// d phi / d own.
Vector link_penalty_gradient(const LinkInput& link, const Vector& own);

using NodeSolver = std::function<NodeOutput(const NodeSpec&, const NodeInput&, double tol)>;

// Node kinds: quadratic, layout, routing, slotting, reassignment, classification.
const std::map<std::string, NodeSolver>& solver_registry();
std::vector<std::string> solver_kinds();

// Runs the registered solver. InfeasibleError from the solver becomes
// status "infeasible"; an unknown kind throws InvalidArgument.
NodeOutput solve_node(const NodeSpec& node, const NodeInput& input, double tol);

struct ActiveSet {
  std::set<std::string> active;
  std::map<std::string, Vector> frozen; // link id -> value sent by the inactive endpoint
};

// Throws ConfigError for unknown node ids, an empty set, or a link between an
// active and an inactive node without a frozen value of the right size.
ActiveSet configure_active_set(const NhatcGraph& graph, const std::set<std::string>& active,
                               const std::map<std::string, Vector>& frozen);
ActiveSet all_active(const NhatcGraph& graph);
// Inactive endpoints frozen at the link's initial values.
ActiveSet active_with_initial_freeze(const NhatcGraph& graph, const std::set<std::string>& active);

struct SolveRequest {
  const NodeSpec* node = nullptr;
  NodeInput input;
  double tol = 1e-10;
};

// Solves every request and returns outputs in request order.
using Dispatcher = std::function<std::vector<NodeOutput>(const std::vector<SolveRequest>&)>;

// Solves requests concurrently on local threads.
std::vector<NodeOutput> dispatch_local(const std::vector<SolveRequest>& requests);

struct NhatcOptions {
  double tol_c = 1e-4;
  int max_outer = 50;
  double beta = 2.2;
  double gamma = 0.4;
  double solve_tol = 1e-10;
  double inner_tol = 0.0; // 0 picks 1e-3 * tol_c
  int max_inner = 200;
  bool memoize = true;
};

enum class NhatcStatus { converged, max_outer };
std::string to_string(NhatcStatus status);

struct NhatcResult {
  NhatcStatus status = NhatcStatus::max_outer;
  int iterations = 0;
  double c_inf = 0.0;
  std::map<std::string, CouplingState> links;
  std::map<std::string, NodeOutput> outputs; // active nodes, at the returned iterate
  json report;
};

NhatcResult nhatc_solve(const NhatcGraph& graph, const ActiveSet& active,
                        const NhatcOptions& options = {}, const Dispatcher& dispatch = dispatch_local);

// Two quadratic nodes min (z1 - a)^2 and min (z2 - b)^2 tied by z1 = z2.
NhatcGraph two_node_toy(double a = 2.0, double b = 4.0);

// Compares two reports on every numeric field, skipping wall time and solve
// locations. On mismatch `why` receives the first differing path.
bool reports_equivalent(const json& a, const json& b, double tol, std::string* why = nullptr);

json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);
void to_json(json& j, const NodeSpec& n);
void from_json(const json& j, NodeSpec& n);
void to_json(json& j, const LinkInput& l);
void from_json(const json& j, LinkInput& l);
void to_json(json& j, const NodeInput& in);
void from_json(const json& j, NodeInput& in);
void to_json(json& j, const NodeOutput& out);
void from_json(const json& j, NodeOutput& out);

} // namespace wsdo
