// wsdo: generate, optimize, evaluate, compare and plot warehouse instances,
// or serve node solves to a coordinator.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "wsdo/distributed.hpp"
#include "wsdo/error.hpp"
#include "wsdo/json_io.hpp"
#include "wsdo/plot.hpp"
#include "wsdo/throughput.hpp"
#include "wsdo/warehouse_graph.hpp"

namespace fs = std::filesystem;
using namespace wsdo;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInfeasible = 2, kIo = 3 };

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

struct RunConfig {
  std::string instance;
  std::vector<std::string> active = kWarehouseNodes;
  double tol = 1e-4;
  int max_outer = 50;
  std::string workers;
  std::uint64_t seed = 42;
  std::string out = "out";
  WarehouseOptions options;
};

// Keys mirror the command-line flags; flags given explicitly win.
RunConfig load_run_config(const fs::path& path) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  try {
    c.instance = j.value("instance", c.instance);
    if (j.contains("active"))
      c.active = j["active"].is_string() ? split_list(j["active"].get<std::string>())
                                         : j["active"].get<std::vector<std::string>>();
    c.tol = j.value("tol", c.tol);
    c.max_outer = j.value("max_outer", c.max_outer);
    c.workers = j.value("workers", c.workers);
    c.seed = j.value("seed", c.seed);
    c.out = j.value("out", c.out);
    if (j.contains("options")) c.options = j["options"].get<WarehouseOptions>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config field: ") + e.what());
  }
  return c;
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path, dump(j));
}

int cmd_gen(std::uint64_t seed, const std::string& config, const std::string& out) {
  GenParams params;
  if (!config.empty()) {
    try {
      params = read_json_file(config).get<GenParams>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad generator config: ") + e.what());
    }
  }
  const Instance inst = generate_instance(seed, params);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  save_instance(out, inst);
  std::cout << "wrote " << out << " (" << inst.catalog.size() << " products, " << inst.history.size()
            << " orders)\n";
  return kOk;
}

int cmd_optimize(RunConfig cfg) {
  if (cfg.instance.empty()) throw ConfigError("no instance given");
  if (!(cfg.tol > 0)) throw ConfigError("--tol must be positive");
  if (cfg.max_outer <= 0) throw ConfigError("--max-outer must be positive");
  std::set<std::string> active;
  for (const auto& a : cfg.active) {
    if (std::find(kWarehouseNodes.begin(), kWarehouseNodes.end(), a) == kWarehouseNodes.end())
      throw ConfigError("unknown subsystem '" + a + "' in --active");
    active.insert(a);
  }
  if (active.empty()) throw ConfigError("--active names no subsystem");

  const Instance inst = load_instance(cfg.instance);
  cfg.options.seed = cfg.seed;
  const NhatcGraph graph = warehouse_graph(inst, cfg.options);
  const ActiveSet set = active_with_initial_freeze(graph, active);

  NhatcOptions opts;
  opts.tol_c = cfg.tol;
  opts.max_outer = cfg.max_outer;

  const WorkerRegistry registry =
      resolve_registry(cfg.workers.empty() ? std::nullopt : std::optional<fs::path>(cfg.workers));
  std::optional<Coordinator> coord;
  if (!registry.workers.empty()) coord.emplace(registry);

  NhatcResult res = nhatc_solve(graph, set, opts, coord ? coord->dispatcher() : Dispatcher(dispatch_local));

  json report = res.report;
  std::cerr << "wall time " << report.value("wall_time_s", 0.0) << " s\n";
  report.erase("wall_time_s");
  if (coord) report["dispatch_events"] = coord->events();
  report["run_config"] = {{"instance", cfg.instance},       {"active", cfg.active}, {"tol", cfg.tol},
                          {"max_outer", cfg.max_outer},     {"seed", cfg.seed},     {"options", cfg.options},
                          {"workers", registry.workers.size()}};

  Instance updated = inst;
  if (auto it = res.links.find("aisle_widths"); it != res.links.end())
    updated.layout = with_aisle_widths(inst.layout, std::vector<double>(it->second.t.data(),
                                                                        it->second.t.data() + it->second.t.size()));
  if (auto it = res.links.find("slots_routing"); it != res.links.end())
    updated.assignment = assignment_from_vector(inst, it->second.t);

  const fs::path out(cfg.out);
  write_json(out / "report.json", report);
  save_instance(out / "instance.json", updated);
  std::cout << to_string(res.status) << " after " << res.iterations << " outer iterations, |c|inf = " << res.c_inf
            << "\nwrote " << (out / "report.json").string() << " and " << (out / "instance.json").string() << "\n";
  return res.status == NhatcStatus::converged ? kOk : kInfeasible;
}

int cmd_evaluate(const std::string& instance, const std::string& policy, std::uint64_t seed,
                 const std::string& out, const std::string& csv) {
  const Instance inst = load_instance(instance);
  const ThroughputReport r = simulate_day(inst, parse_bundle(policy), seed);
  write_json(out, r);
  if (!csv.empty()) write_text_file(csv, csv_header() + csv_row(policy, r));
  std::cout << r.orders_completed << " of " << r.orders_offered << " orders completed with " << r.parallelism
            << " carts, " << r.travel_meters << " m travelled\nwrote " << out << "\n";
  return kOk;
}

int cmd_compare(const std::string& instance, const std::string& baseline, const std::string& optimized,
                std::uint64_t seed, const std::string& out, const std::string& csv) {
  const Instance inst = load_instance(instance);
  const Comparison c = compare_policies(inst, parse_bundle(baseline), parse_bundle(optimized), seed);
  write_json(out, c);
  if (!csv.empty())
    write_text_file(csv, csv_header() + csv_row("baseline", c.baseline) + csv_row("optimized", c.optimized));
  std::cout << "baseline " << c.baseline.orders_completed << ", optimized " << c.optimized.orders_completed
            << " of " << c.baseline.orders_offered << " orders; improvement ";
  if (c.improvement)
    std::cout << *c.improvement;
  else
    std::cout << "undefined (baseline completed nothing)";
  std::cout << "\nwrote " << out << "\n";
  return kOk;
}

int cmd_worker(const std::string& host, int port, const std::string& caps, WorkerOptions opts) {
  opts.capabilities = split_list(caps);
  return worker_serve(host, port, opts, [&](int bound) {
    std::cout << "listening on " << host << ':' << bound << std::endl;
  });
}

int cmd_plot(const std::string& instance, const std::string& order_id, bool given_order, const std::string& out) {
  const Instance inst = load_instance(instance);
  const RouteGraph g = build_route_graph(inst.layout, inst.params.cell_size);
  std::optional<Route> route;
  const Order* order = nullptr;
  for (const auto& o : inst.history)
    if (order_id.empty() || o.id == order_id) {
      order = &o;
      break;
    }
  if (!order_id.empty() && !order) throw ConfigError("no order named " + order_id);
  if (order) {
    std::vector<SlotId> picks;
    for (const auto& l : order->lines) picks.push_back(inst.assignment.at(l.product_id));
    route = given_order ? route_in_given_order(g, g.depot_node, picks)
                        : optimize_pick_sequence(g, g.depot_node, picks);
  }
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  write_text_file(out, render_svg(inst.layout, g, route));
  std::cout << "wrote " << out;
  if (order) std::cout << " (order " << order->id << ", " << route->total_distance << " m)";
  std::cout << "\n";
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Warehouse system design optimization"};
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  std::string config, out, instance, csv;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic instance");
  gen->add_option("--seed", seed, "Generator seed")->capture_default_str();
  gen->add_option("--config", config, "JSON generator parameters")->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Instance file to write")->default_str("instance.json");

  RunConfig run;
  std::string active_flag;
  auto* opt = app.add_subcommand("optimize", "Coordinate the subsystems and write a report");
  opt->add_option("instance", run.instance, "Instance JSON");
  opt->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
  opt->add_option("--active", active_flag, "Comma list of active subsystems");
  opt->add_option("--workers", run.workers, "Worker registry JSON (overrides WSDO_WORKERS)");
  opt->add_option("--tol", run.tol, "Consistency tolerance on |c|inf");
  opt->add_option("--max-outer", run.max_outer, "Outer iteration cap");
  opt->add_option("--seed", run.seed, "Clustering and training seed");
  opt->add_option("--out", run.out, "Output directory");

  std::string policy = "optimized", baseline = "baseline", optimized = "optimized";
  auto* eval = app.add_subcommand("evaluate", "Simulate one shift under a policy bundle");
  eval->add_option("instance", instance, "Instance JSON")->required();
  eval->add_option("--policy", policy,
                   "baseline, optimized, or slotting,sequencing,batching,layout")->capture_default_str();
  eval->add_option("--seed", seed)->capture_default_str();
  eval->add_option("--out", out, "Report JSON to write")->default_str("evaluate.json");
  eval->add_option("--csv", csv, "Optional CSV summary");

  auto* cmp = app.add_subcommand("compare", "Simulate baseline and optimized bundles");
  cmp->add_option("instance", instance, "Instance JSON")->required();
  cmp->add_option("--baseline", baseline)->capture_default_str();
  cmp->add_option("--optimized", optimized)->capture_default_str();
  cmp->add_option("--seed", seed)->capture_default_str();
  cmp->add_option("--out", out, "Comparison JSON to write")->default_str("compare.json");
  cmp->add_option("--csv", csv, "Optional CSV summary");

  std::string host = "127.0.0.1", caps;
  int port = 7070;
  int delay_ms = 0;
  WorkerOptions wopts;
  auto* wrk = app.add_subcommand("worker", "Serve node solves over TCP");
  wrk->add_option("--host", host)->capture_default_str();
  wrk->add_option("--port", port, "0 picks a free port")->capture_default_str();
  wrk->add_option("--capabilities", caps, "Comma list of node kinds (default: all)");
  wrk->add_option("--solve-delay-ms", delay_ms, "Sleep before each solve")->group("Testing");
  wrk->add_option("--fail-after", wopts.fail_after_solves, "Exit on the Nth SOLVE")->group("Testing");

  std::string order_id;
  bool given_order = false;
  auto* plot = app.add_subcommand("plot", "Render the layout and one order's route as SVG");
  plot->add_option("instance", instance, "Instance JSON")->required();
  plot->add_option("--order", order_id, "Order id to route (default: first order)");
  plot->add_flag("--given-order", given_order, "Route picks in listed order");
  plot->add_option("--out", out, "SVG file to write")->default_str("plot.svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen(seed, config, out.empty() ? "instance.json" : out);
    if (*opt) {
      const std::string inst_flag = run.instance, workers_flag = run.workers, out_flag = run.out;
      if (!config.empty()) {
        RunConfig c = load_run_config(config);
        if (!inst_flag.empty()) c.instance = inst_flag;
        if (!workers_flag.empty()) c.workers = workers_flag;
        if (opt->count("--tol")) c.tol = run.tol;
        if (opt->count("--max-outer")) c.max_outer = run.max_outer;
        if (opt->count("--seed")) c.seed = run.seed;
        if (opt->count("--out")) c.out = out_flag;
        run = c;
      }
      if (!active_flag.empty()) run.active = split_list(active_flag);
      return cmd_optimize(run);
    }
    if (*eval) return cmd_evaluate(instance, policy, seed, out.empty() ? "evaluate.json" : out, csv);
    if (*cmp) return cmd_compare(instance, baseline, optimized, seed, out.empty() ? "compare.json" : out, csv);
    if (*wrk) {
      wopts.solve_delay = std::chrono::milliseconds(delay_ms);
      wopts.fail_exits_process = true;
      return cmd_worker(host, port, caps, wopts);
    }
    if (*plot) return cmd_plot(instance, order_id, given_order, out.empty() ? "plot.svg" : out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const CapacityError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}
