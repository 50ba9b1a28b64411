#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "wsdo/nhatc.hpp"
#include "wsdo/wire.hpp"

namespace wsdo {

// One TCP stream carrying framed messages. Sends are serialised by a mutex
// and stamped with a per-connection increasing msg_id.
class Connection {
public:
  explicit Connection(int fd) : fd_(fd) {}
  ~Connection();
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  static std::unique_ptr<Connection> connect(const std::string& host, int port,
                                             std::chrono::milliseconds timeout);

  // Returns the msg_id used. Throws IoError when the peer is gone.
  std::uint64_t send(MessageType type, json payload);
  // Next message, or nullopt on timeout. Throws IoError on EOF or socket
  // failure, FramingError/ProtocolError on bad input.
  std::optional<WireMessage> receive(std::chrono::milliseconds timeout);
  // Unblocks a concurrent receive and makes later sends fail.
  void shutdown();
  int fd() const { return fd_; }

private:
  int fd_;
  std::mutex send_mu_;
  std::uint64_t next_id_ = 1;
  FrameDecoder decoder_;
};

struct WorkerOptions {
  std::vector<std::string> capabilities; // empty: every registered kind
  std::chrono::milliseconds solve_delay{0};
  // Fault injection: on receiving this many SOLVEs (1-based) the worker dies
  // without replying. 0 disables.
  int fail_after_solves = 0;
  bool fail_exits_process = false; // otherwise all sockets close and serving stops
};

// Serves until a SHUTDOWN arrives, then returns 0. `on_listening` receives the
// bound port (useful with port 0).
int worker_serve(const std::string& host, int port, const WorkerOptions& options,
                 const std::function<void(int)>& on_listening = {});

struct WorkerEndpoint {
  std::string host;
  int port = 0;
  std::vector<std::string> capabilities; // empty: accept whatever HELLO reports
};

struct WorkerRegistry {
  std::vector<WorkerEndpoint> workers;
};

void to_json(json& j, const WorkerEndpoint& w);
void from_json(const json& j, WorkerEndpoint& w);

// A JSON list of {host, port, capabilities}, or an object with a "workers" list.
WorkerRegistry load_registry(const std::filesystem::path& path);
// The explicit path wins over WSDO_WORKERS; neither gives an empty registry.
WorkerRegistry resolve_registry(const std::optional<std::filesystem::path>& explicit_path);

struct CoordinatorOptions {
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds connect_timeout{2000};
};

// Dispatches node solves to remote workers, one in flight per worker. A
// failed or timed-out solve is retried once on another capable worker, then
// solved in-process. Results never depend on who solved what.
class Coordinator {
public:
  Coordinator(WorkerRegistry registry, CoordinatorOptions options = {});
  ~Coordinator();

  std::vector<NodeOutput> dispatch(const std::vector<SolveRequest>& requests);
  Dispatcher dispatcher();

  // Number of workers that completed the handshake and are still alive.
  int live_workers();
  // Retries, fallbacks and worker losses in the order they happened.
  json events();
  void shutdown_workers();

private:
  struct Worker;
  bool ensure_connected(Worker& w);
  std::optional<NodeOutput> remote_solve(Worker& w, const SolveRequest& req, std::string& failure);
  void note(json event);

  WorkerRegistry registry_;
  CoordinatorOptions options_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::mutex events_mu_;
  json events_ = json::array();
};

std::string endpoint_name(const WorkerEndpoint& w);

} // namespace wsdo
