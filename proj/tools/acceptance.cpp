// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <queue>
#include <regex>
#include <set>
#include <sstream>

#include "wsdo/distributed.hpp"
#include "wsdo/error.hpp"
#include "wsdo/layout_opt.hpp"
#include "wsdo/order_class.hpp"
#include "wsdo/rng.hpp"
#include "wsdo/routing.hpp"
#include "wsdo/slotting.hpp"
#include "wsdo/throughput.hpp"
#include "wsdo/warehouse_graph.hpp"
#include "wsdo/wire.hpp"

using namespace wsdo;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "failed: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

// ---- 1. routing exactness ----------------------------------------------

// Hop-count BFS; the route graph has uniform edge weights of one cell.
std::vector<double> bfs_from(const RouteGraph& g, int src) {
  std::vector<double> d(g.node_count(), INFINITY);
  std::queue<int> q;
  d[static_cast<std::size_t>(src)] = 0.0;
  q.push(src);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (const auto& e : g.adj[static_cast<std::size_t>(u)])
      if (std::isinf(d[static_cast<std::size_t>(e.to)])) {
        d[static_cast<std::size_t>(e.to)] = d[static_cast<std::size_t>(u)] + g.cell_size;
        q.push(e.to);
      }
  }
  return d;
}

void criterion_routing(Outcome& o) {
  int matched = 0;
  double solver_time = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Instance inst = generate_instance(seed, GenParams{});
    const RouteGraph g = build_route_graph(inst.layout, inst.params.cell_size);
    for (const auto& adj : g.adj)
      for (const auto& e : adj)
        if (e.weight != g.cell_size) throw std::logic_error("route graph edges are not uniform");
    const auto slots = all_slots(inst.layout);
    Rng rng(seed * 7919);
    std::vector<SlotId> picks;
    std::set<std::size_t> used;
    while (picks.size() < 7) {
      const auto i = static_cast<std::size_t>(rng.below(slots.size()));
      if (used.insert(i).second) picks.push_back(slots[i]);
    }

    const auto t0 = Clock::now();
    const Route r = optimize_pick_sequence(g, g.depot_node, picks);
    solver_time += seconds_since(t0);

    std::vector<int> nodes{g.depot_node};
    for (const auto& s : picks) nodes.push_back(g.pick_node_of(s));
    std::vector<std::vector<double>> d;
    for (int n : nodes) d.push_back(bfs_from(g, n));
    auto dist = [&](std::size_t a, std::size_t b) { return d[a][static_cast<std::size_t>(nodes[b])]; };
    std::vector<std::size_t> perm(7);
    std::iota(perm.begin(), perm.end(), 1);
    double best = INFINITY;
    do {
      double len = dist(0, perm[0]);
      for (std::size_t i = 0; i + 1 < perm.size(); ++i) len += dist(perm[i], perm[i + 1]);
      len += dist(perm.back(), 0);
      best = std::min(best, len);
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (r.total_distance == best) ++matched;
    else
      o.require(false, "seed " + std::to_string(seed) + ": " + std::to_string(r.total_distance) + " vs " +
                           std::to_string(best));
  }
  o.require(solver_time < 5.0, "routing took " + std::to_string(solver_time) + " s");
  o.detail << (o.pass ? "" : " | ") << matched << "/50 instances equal brute force (exact), solver time "
           << std::setprecision(3) << solver_time << " s (limit 5 s)";
}

// ---- 2. shortest paths vs Bellman-Ford ----------------------------------

RouteGraph random_grid(Rng& rng) {
  RouteGraph g;
  g.cell_size = 1.0;
  g.nx = 2 + static_cast<int>(rng.below(19));
  g.ny = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(400 / g.nx - 1)));
  const double blocked = 0.35 * rng.uniform();
  g.cell_to_node.assign(static_cast<std::size_t>(g.nx * g.ny), -1);
  for (int y = 0; y < g.ny; ++y)
    for (int x = 0; x < g.nx; ++x) {
      if (rng.uniform() < blocked) continue;
      g.cell_to_node[static_cast<std::size_t>(y * g.nx + x)] = static_cast<int>(g.adj.size());
      g.cell_x.push_back(x);
      g.cell_y.push_back(y);
      g.aisle.push_back(-1);
      g.adj.emplace_back();
    }
  // Dyadic weights keep every path sum exact.
  for (std::size_t u = 0; u < g.adj.size(); ++u)
    for (auto [dx, dy] : {std::pair{1, 0}, {0, 1}}) {
      const int v = g.node_at(g.cell_x[u] + dx, g.cell_y[u] + dy);
      if (v < 0) continue;
      const double w = 0.25 * static_cast<double>(1 + rng.below(16));
      g.adj[u].push_back({v, w});
      g.adj[static_cast<std::size_t>(v)].push_back({static_cast<int>(u), w});
    }
  for (auto& a : g.adj) std::sort(a.begin(), a.end(), [](const Edge& p, const Edge& q) { return p.to < q.to; });
  return g;
}

std::vector<double> bellman_ford(const RouteGraph& g, int src) {
  std::vector<double> d(g.node_count(), INFINITY);
  d[static_cast<std::size_t>(src)] = 0.0;
  for (std::size_t round = 0; round + 1 < g.node_count(); ++round) {
    bool changed = false;
    for (std::size_t u = 0; u < g.node_count(); ++u) {
      if (std::isinf(d[u])) continue;
      for (const auto& e : g.adj[u])
        if (d[u] + e.weight < d[static_cast<std::size_t>(e.to)]) {
          d[static_cast<std::size_t>(e.to)] = d[u] + e.weight;
          changed = true;
        }
    }
    if (!changed) break;
  }
  return d;
}

void criterion_dijkstra(Outcome& o) {
  Rng rng(2);
  int grids = 0, compared = 0;
  std::size_t max_nodes = 0;
  while (grids < 100) {
    const RouteGraph g = random_grid(rng);
    if (g.node_count() < 2) continue;
    ++grids;
    max_nodes = std::max(max_nodes, g.node_count());
    o.require(g.node_count() <= 400, "grid too large");
    for (int k = 0; k < 3; ++k) {
      const int src = static_cast<int>(rng.below(g.node_count()));
      const auto a = dijkstra_distances(g, src);
      const auto b = bellman_ford(g, src);
      for (std::size_t i = 0; i < a.size(); ++i) {
        ++compared;
        if (a[i] != b[i]) {
          o.require(false, "grid " + std::to_string(grids) + " node " + std::to_string(i));
          break;
        }
      }
    }
  }
  o.detail << (o.pass ? "" : " | ") << grids << " grids (up to " << max_nodes << " nodes), " << compared
           << " distances identical to Bellman-Ford";
}

// ---- 3. layout analytic optimum and SQP certificates --------------------

double rel_gap(const Vector& a, const Vector& b) {
  return ((a - b).array().abs() / b.array().abs().max(1.0)).maxCoeff();
}

void criterion_layout(Outcome& o) {
  const RowTemplate t{30.0, 1.5, 30.0};
  const auto r = optimize_layout(t, {120.0}, 0.01, 1.0);
  const double a = r.aisle_widths.at(0);
  o.require(std::abs(a - 1.2) <= 1e-6, "a* = " + std::to_string(a));
  o.require(std::abs(r.utilization - 0.5778) <= 1e-4, "u = " + std::to_string(r.utilization));
  double worst_kkt = r.solver.kkt_residual;
  double worst_fd = 0.0;

  Rng rng(3);
  // Relaxed layout objective on random rate vectors.
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(5));
    std::vector<double> rates;
    for (int i = 0; i < m; ++i) rates.push_back(300.0 * rng.uniform());
    const NlpProblem p = layout_problem(t, rates, 0.01, 1.0);
    Vector x(m);
    for (int i = 0; i < m; ++i) x(i) = 1.0 + 3.0 * rng.uniform();
    worst_fd = std::max(worst_fd, rel_gap(finite_difference_gradient(p.objective, x), p.gradient(x)));
    worst_fd = std::max(worst_fd, rel_gap(finite_difference_jacobian(p.inequalities, x, p.inequality_count),
                                          p.inequality_jacobian(x)));
    worst_kkt = std::max(worst_kkt, optimize_layout(t, rates, 0.01, 1.0).solver.kkt_residual);
  }

  // The coordinated layout subproblem, with a penalised rate copy.
  const Instance inst = generate_instance(42, GenParams{});
  const auto m = static_cast<Eigen::Index>(inst.layout.aisle_widths.size());
  for (int trial = 0; trial < 10; ++trial) {
    LinkInput li;
    li.id = "pick_rate";
    li.side = LinkSide::response;
    li.neighbor = Vector(m);
    li.v = Vector(m);
    li.w = Vector(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      li.neighbor(i) = 200.0 * rng.uniform();
      li.v(i) = rng.uniform() - 0.5;
      li.w(i) = 0.5 + rng.uniform();
    }
    const LayoutNodeProblem lp = layout_node_problem(inst, {}, NodeInput{{li}});
    Vector x(2 * m);
    for (Eigen::Index i = 0; i < 2 * m; ++i) x(i) = i < m ? 1.0 + 2.0 * rng.uniform() : 200.0 * rng.uniform();
    worst_fd = std::max(worst_fd, rel_gap(finite_difference_gradient(lp.problem.objective, x), lp.problem.gradient(x)));
    const NlpResult res = sqp_solve(lp.problem, lp.x0, 1e-10);
    worst_kkt = std::max(worst_kkt, res.kkt_residual);
  }
  o.require(worst_kkt <= 1e-6, "KKT residual " + std::to_string(worst_kkt));
  o.require(worst_fd <= 1e-5, "finite-difference gap " + std::to_string(worst_fd));
  o.detail << (o.pass ? "" : " | ") << std::setprecision(10) << "a* = " << a << ", u = " << r.utilization
           << std::setprecision(3) << ", worst KKT residual " << worst_kkt << ", worst FD gap " << worst_fd;
}

// ---- 4. k-means ----------------------------------------------------------

double brute_force_inertia(const std::vector<double>& x, int k) {
  const int n = static_cast<int>(x.size());
  int total = 1;
  for (int i = 0; i < n; ++i) total *= k;
  double best = INFINITY;
  for (int code = 0; code < total; ++code) {
    std::vector<int> lab(static_cast<std::size_t>(n));
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (int i = 0, c = code; i < n; ++i, c /= k) {
      lab[static_cast<std::size_t>(i)] = c % k;
      sum[static_cast<std::size_t>(c % k)] += x[static_cast<std::size_t>(i)];
      cnt[static_cast<std::size_t>(c % k)] += 1;
    }
    if (std::count(cnt.begin(), cnt.end(), 0) > 0) continue;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(lab[static_cast<std::size_t>(i)]);
      const double mu = sum[j] / cnt[j];
      s += (x[static_cast<std::size_t>(i)] - mu) * (x[static_cast<std::size_t>(i)] - mu);
    }
    best = std::min(best, s);
  }
  return best;
}

bool monotone(const Clustering& c) {
  for (std::size_t i = 1; i < c.inertia_history.size(); ++i)
    if (c.inertia_history[i] > c.inertia_history[i - 1] * (1 + 1e-12) + 1e-12) return false;
  return true;
}

void criterion_kmeans(Outcome& o) {
  struct Fixture {
    std::vector<double> x;
    int k;
  };
  const std::vector<Fixture> fixtures{
      {{0.0, 0.1, 10.0, 10.1}, 2}, {{0.0, 0.1, 10.0, 10.1}, 1}, {{0.0, 0.1, 10.0, 10.1}, 3},
      {{0.0, 0.1, 10.0, 10.1}, 4}, {{-5.0, -4.8, 3.0, 3.1}, 2},
      {{0.0, 5.0, 10.0, 100.0}, 3}, {{2.0, 2.0, 9.0, 9.0}, 2},   {{0.0, 1.0, 1.5, 40.0}, 2},
      {{-3.0, 0.0, 0.2, 7.0}, 3},
  };
  int optimal = 0;
  for (const auto& f : fixtures)
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Matrix p(4, 1);
      for (int i = 0; i < 4; ++i) p(i, 0) = f.x[static_cast<std::size_t>(i)];
      const Clustering c = kmeans(p, f.k, seed);
      const double best = brute_force_inertia(f.x, f.k);
      if (std::abs(c.inertia - best) <= 1e-12 * std::max(1.0, best)) ++optimal;
      else o.require(false, "fixture k=" + std::to_string(f.k) + " seed " + std::to_string(seed));
      o.require(monotone(c), "non-monotone inertia on a fixture");
    }

  // Evenly spaced points: a single Lloyd run can stop at a tie-locked fixpoint. Reported, not gated.
  int even_optimal = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Matrix p(4, 1);
    p << 1.0, 2.0, 3.0, 4.0;
    const Clustering c = kmeans(p, 2, seed);
    even_optimal += std::abs(c.inertia - brute_force_inertia({1.0, 2.0, 3.0, 4.0}, 2)) <= 1e-12;
    o.require(monotone(c), "non-monotone inertia on evenly spaced points");
  }

  Rng rng(4);
  int runs = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 5 + static_cast<int>(rng.below(80));
    const int d = 1 + static_cast<int>(rng.below(4));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n, 8))));
    Matrix p(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) p(i, j) = std::round(10.0 * rng.uniform()) + (i % 3) * 5.0;
    const Clustering a = kmeans(p, k, static_cast<std::uint64_t>(trial));
    const Clustering b = kmeans(p, k, static_cast<std::uint64_t>(trial));
    ++runs;
    o.require(monotone(a), "non-monotone inertia, trial " + std::to_string(trial));
    o.require(a.labels == b.labels && a.centroids == b.centroids && a.inertia == b.inertia,
              "non-deterministic, trial " + std::to_string(trial));
  }
  const Instance inst = generate_instance(42, GenParams{});
  const ProductFeatures feats = product_features(inst.catalog, inst.history);
  for (int k = 2; k <= 6; ++k) {
    const Clustering a = kmeans_cluster(feats, k, 42), b = kmeans_cluster(feats, k, 42);
    ++runs;
    o.require(monotone(a), "non-monotone inertia on product features");
    o.require(a.labels == b.labels, "non-deterministic on product features");
  }
  o.detail << (o.pass ? "" : " | ") << optimal << "/" << fixtures.size() * 10
           << " fixture runs at the brute-force optimum, " << runs << " further runs monotone and repeatable"
           << " (evenly spaced {1,2,3,4}: " << even_optimal << "/10 seeds optimal, not gated)";
}

// ---- 5. SVM --------------------------------------------------------------

Sample sample2(double a, double b, int label, std::int64_t ts) {
  Sample s;
  s.x = Vector(2);
  s.x << a, b;
  s.label = label;
  s.timestamp = ts;
  return s;
}

std::vector<Sample> blobs(Rng& rng, int n, std::int64_t ts0) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.below(2));
    const double c = label == 0 ? 1.0 : 4.0;
    out.push_back(sample2(c + rng.uniform() - 0.5, c + rng.uniform() - 0.5, label, ts0 + i));
  }
  return out;
}

void criterion_svm(Outcome& o) {
  const std::vector<Sample> toy{sample2(0, 0, 0, 1), sample2(0, 1, 0, 2), sample2(5, 5, 1, 3), sample2(5, 6, 1, 4)};
  const double acc = svm_accuracy(svm_train(toy, 1.0, 50, 1), toy);
  o.require(acc == 1.0, "toy accuracy " + std::to_string(acc));

  Rng rng(21);
  const auto first = blobs(rng, 20, 0);
  SvmModel m = svm_train(first, 1.0, 30, 2, 20);
  SampleWindow w{20, {first.begin(), first.end()}};
  double worst = 0.0;
  for (int step = 0; step < 10; ++step) {
    std::tie(m, w) = svm_update(m, w, blobs(rng, 5, 1000 + 10 * step));
    const auto data = w.contents();
    const double a = svm_accuracy(m, data);
    const double scratch = svm_accuracy(svm_train(data, 1.0, 30, 2, 20), data);
    worst = std::max(worst, std::abs(a - scratch));
  }
  o.require(worst <= 0.02, "window vs scratch gap " + std::to_string(worst));
  o.detail << (o.pass ? "" : " | ") << "separable fixture accuracy " << acc
           << ", worst window-vs-scratch accuracy gap " << worst << " over 10 updates (limit 0.02)";
}

// ---- 6. NHATC toy ---------------------------------------------------------

void criterion_toy(Outcome& o) {
  const NhatcGraph g = two_node_toy();
  const NhatcResult r = nhatc_solve(g, all_active(g));
  const double z = r.links.at("z").t(0);
  o.require(std::abs(z - 3.0) <= 1e-3, "z = " + std::to_string(z));
  o.require(r.c_inf <= 1e-4, "|c| = " + std::to_string(r.c_inf));
  o.require(r.iterations <= 50, std::to_string(r.iterations) + " iterations");
  o.detail << (o.pass ? "" : " | ") << std::setprecision(8) << "z = " << z << ", |c|inf = " << r.c_inf << ", "
           << r.iterations << " outer iterations";
}

// ---- 7 and 9: worker processes ------------------------------------------

struct WorkerProcess {
  FILE* pipe = nullptr;
  int port = 0;

  explicit WorkerProcess(const std::string& extra) {
    pipe = ::popen((std::string(WSDO_CLI_PATH) + " worker --port 0 " + extra).c_str(), "r");
    if (!pipe) throw IoError("cannot start worker");
    char line[256] = {};
    if (!std::fgets(line, sizeof line, pipe)) throw IoError("worker did not announce a port");
    std::smatch m;
    const std::string s(line);
    if (!std::regex_search(s, m, std::regex(R"(:(\d+))"))) throw IoError("unexpected worker banner: " + s);
    port = std::stoi(m[1]);
  }
  // Exit status once the process is gone.
  int wait() {
    const int st = ::pclose(pipe);
    pipe = nullptr;
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }
  ~WorkerProcess() {
    if (!pipe) return;
    try {
      Connection::connect("127.0.0.1", port, 500ms)->send(MessageType::shutdown, json::object());
    } catch (const Error&) {
    }
    ::pclose(pipe);
  }
  WorkerEndpoint endpoint() const { return {"127.0.0.1", port, {}}; }
};

void criterion_distributed(Outcome& o) {
  const Instance inst = generate_instance(42, GenParams{});
  const NhatcGraph g = warehouse_graph(inst);
  const NhatcResult local = nhatc_solve(g, all_active(g));

  std::string why;
  int remote_solves = 0;
  {
    std::vector<std::unique_ptr<WorkerProcess>> ws;
    WorkerRegistry reg;
    for (int i = 0; i < 4; ++i) {
      ws.push_back(std::make_unique<WorkerProcess>(""));
      reg.workers.push_back(ws.back()->endpoint());
    }
    Coordinator coord(reg);
    const NhatcResult remote = nhatc_solve(g, all_active(g), {}, coord.dispatcher());
    for (const auto& s : remote.report.at("solve_log"))
      remote_solves += s.at("location").get<std::string>().rfind("worker", 0) == 0;
    o.require(reports_equivalent(remote.report, local.report, 1e-9, &why), "4 workers vs 0: " + why);
    o.require(remote_solves > 0, "no solve ran remotely");
    coord.shutdown_workers();
  }

  std::string events;
  int killed_status = -1;
  {
    std::vector<std::unique_ptr<WorkerProcess>> ws;
    WorkerRegistry reg;
    ws.push_back(std::make_unique<WorkerProcess>("--fail-after 2"));
    for (int i = 0; i < 3; ++i) ws.push_back(std::make_unique<WorkerProcess>(""));
    for (const auto& w : ws) reg.workers.push_back(w->endpoint());
    Coordinator coord(reg);
    const NhatcResult remote = nhatc_solve(g, all_active(g), {}, coord.dispatcher());
    o.require(remote.status == local.status, "killed run status differs");
    o.require(reports_equivalent(remote.report, local.report, 1e-9, &why), "after a kill: " + why);
    o.require(reports_equivalent(remote.report.at("final"), local.report.at("final"), 0.0, &why),
              "final numbers not identical: " + why);
    bool retried = false;
    for (const auto& e : coord.events()) retried = retried || e.at("event") == "retry";
    o.require(retried, "no retry recorded");
    events = coord.events().dump();
    coord.shutdown_workers();
    killed_status = ws[0]->wait();
    o.require(killed_status != 0, "the failing worker exited cleanly");
  }
  o.detail << (o.pass ? "" : " | ") << "4-worker report matches in-process within 1e-9 (" << remote_solves
           << " remote solves); worker killed mid-run (exit " << killed_status
           << "), run completed with identical final numbers";
}

// ---- 8. throughput ----------------------------------------------------------

void criterion_throughput(Outcome& o) {
  const auto t0 = Clock::now();
  const Instance inst = generate_instance(42, GenParams{});
  const Comparison c = compare_policies(inst, PolicyBundle::baseline(), PolicyBundle::optimized(), 42);
  const double secs = seconds_since(t0);
  o.require(c.improvement.has_value(), "improvement undefined");
  const double imp = c.improvement.value_or(0.0);
  o.require(imp >= 0.20, "improvement " + std::to_string(imp));
  o.require(secs < 60.0, "compare took " + std::to_string(secs) + " s");
  o.detail << (o.pass ? "" : " | ") << std::setprecision(4) << "baseline " << c.baseline.orders_completed
           << ", optimized " << c.optimized.orders_completed << " of " << c.baseline.orders_offered
           << " orders, improvement " << imp << " (target 0.20), distance ratio " << c.distance_ratio.value_or(-1)
           << ", " << std::setprecision(3) << secs << " s";
}

// ---- 9. protocol -------------------------------------------------------------

json random_json(Rng& rng, int depth) {
  switch (depth > 2 ? rng.below(4) : rng.below(6)) {
  case 0: return rng.uniform() * 1e4 - 5e3;
  case 1: return static_cast<std::int64_t>(rng.below(1u << 30)) - (1 << 29);
  case 2: {
    std::string s;
    static const char* const pieces[] = {"a", "b", "\"", "\\", "\n", "\xc3\xa9", "\xe2\x82\xac", "{", "}", "\t"};
    for (auto n = rng.below(10); n > 0; --n) s += pieces[rng.below(10)];
    return s;
  }
  case 3: return rng.below(2) == 0;
  case 4: {
    json a = json::array();
    for (auto n = rng.below(5); n > 0; --n) a.push_back(random_json(rng, depth + 1));
    return a;
  }
  default: {
    json obj = json::object();
    for (auto n = rng.below(4); n > 0; --n) obj["k" + std::to_string(rng.below(100))] = random_json(rng, depth + 1);
    return obj;
  }
  }
}

void criterion_protocol(Outcome& o) {
  Rng rng(9);
  int round_trips = 0, truncations = 0;
  for (int i = 0; i < 1000; ++i) {
    WireMessage m{static_cast<MessageType>(rng.below(7)), rng.next_u64() >> 1, json::object()};
    for (auto n = rng.below(4); n > 0; --n) m.payload["f" + std::to_string(n)] = random_json(rng, 0);
    const std::string bytes = encode_message(m);
    const auto back = decode_message(bytes);
    if (back.message && *back.message == m && back.consumed == bytes.size()) ++round_trips;
    if (i % 10 == 0)
      for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
        ++truncations;
        if (decode_message(std::string_view(bytes).substr(0, cut)).message) {
          o.require(false, "partial message decoded");
          break;
        }
      }
  }
  o.require(round_trips == 1000, std::to_string(round_trips) + "/1000 round trips");

  WorkerProcess w("--solve-delay-ms 800");
  auto c = Connection::connect("127.0.0.1", w.port, 1000ms);
  const NhatcGraph g = two_node_toy();
  NodeInput in{{{"z", LinkSide::target, Vector::Constant(1, 4.0), Vector::Zero(1), Vector::Ones(1)}}};
  const auto t0 = Clock::now();
  c->send(MessageType::solve, {{"node", g.node("P1")}, {"input", in}, {"tol", 1e-10}});
  const auto pid = c->send(MessageType::ping, json::object());
  const auto first = c->receive(5000ms);
  const double pong_at = seconds_since(t0);
  const auto second = c->receive(5000ms);
  const double result_at = seconds_since(t0);
  o.require(first && first->type == MessageType::pong && first->payload.at("re") == pid, "PING not answered first");
  o.require(second && second->type == MessageType::result, "SOLVE result missing");
  o.require(pong_at < 0.5, "PONG took " + std::to_string(pong_at) + " s");
  c->send(MessageType::shutdown, json::object());
  o.require(w.wait() == 0, "worker did not shut down cleanly");
  o.detail << (o.pass ? "" : " | ") << round_trips << "/1000 randomized round trips, " << truncations
           << " truncated prefixes all incomplete, PONG after " << std::setprecision(3) << pong_at
           << " s while SOLVE took " << result_at << " s";
}

} // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "routing exactness", criterion_routing},
      {2, "shortest-path oracle equivalence", criterion_dijkstra},
      {3, "layout analytic optimum", criterion_layout},
      {4, "k-means", criterion_kmeans},
      {5, "SVM", criterion_svm},
      {6, "NHATC toy convergence", criterion_toy},
      {7, "distributed equivalence", criterion_distributed},
      {8, "throughput improvement", criterion_throughput},
      {9, "protocol", criterion_protocol},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail.str() << " ["
              << std::fixed << std::setprecision(2) << seconds_since(t0) << " s]" << std::defaultfloat << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - static_cast<std::size_t>(failed) << "/"
            << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
