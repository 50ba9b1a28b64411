#include "wsdo/distributed.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <map>
#include <set>
#include <thread>

#include "wsdo/error.hpp"

namespace wsdo {

namespace {

using Clock = std::chrono::steady_clock;

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

std::set<std::string> kinds_or_all(const std::vector<std::string>& caps) {
  if (!caps.empty()) return {caps.begin(), caps.end()};
  const auto all = solver_kinds();
  return {all.begin(), all.end()};
}

} // namespace

// ---------------------------------------------------------------- Connection

Connection::~Connection() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Connection> Connection::connect(const std::string& host, int port,
                                                std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
    throw IoError("cannot resolve " + host + ": " + gai_strerror(rc));
  std::string last = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      pollfd p{fd, POLLOUT, 0};
      const int prc = ::poll(&p, 1, static_cast<int>(timeout.count()));
      if (prc == 1) {
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      } else {
        if (prc == 0) errno = ETIMEDOUT;
        rc = -1;
      }
    }
    if (rc == 0) {
      ::fcntl(fd, F_SETFL, flags);
      set_nodelay(fd);
      ::freeaddrinfo(res);
      return std::make_unique<Connection>(fd);
    }
    last = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw IoError("cannot connect to " + host + ":" + service + ": " + last);
}

std::uint64_t Connection::send(MessageType type, json payload) {
  std::lock_guard lock(send_mu_);
  const std::uint64_t id = next_id_++;
  const std::string bytes = encode_message({type, id, std::move(payload)});
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(sys_error("send failed"));
    }
    off += static_cast<std::size_t>(n);
  }
  return id;
}

std::optional<WireMessage> Connection::receive(std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  while (true) {
    if (auto m = decoder_.next()) return m;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw IoError(sys_error("poll failed"));
    }
    if (rc == 0) continue;
    char buf[65536];
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw IoError(sys_error("recv failed"));
    }
    if (n == 0) throw IoError("connection closed by peer");
    decoder_.feed(std::string_view(buf, static_cast<std::size_t>(n)));
  }
}

void Connection::shutdown() { ::shutdown(fd_, SHUT_RDWR); }

// -------------------------------------------------------------------- Worker

namespace {

struct WorkerState {
  WorkerOptions options;
  std::set<std::string> capabilities;
  std::atomic<bool> stop{false};
  std::atomic<int> solves{0};
  std::mutex mu;
  std::vector<std::shared_ptr<Connection>> connections;

  void halt() {
    stop = true;
    std::lock_guard lock(mu);
    for (auto& c : connections) c->shutdown();
  }
};

void run_solve(WorkerState& st, Connection& conn, WireMessage msg) {
  json reply;
  MessageType type = MessageType::result;
  try {
    if (st.options.solve_delay.count() > 0) std::this_thread::sleep_for(st.options.solve_delay);
    const NodeSpec node = msg.payload.at("node").get<NodeSpec>();
    if (!st.capabilities.count(node.kind)) {
      type = MessageType::error;
      reply = {{"re", msg.msg_id}, {"message", "unsupported capability " + node.kind}};
    } else {
      const NodeInput input = msg.payload.at("input").get<NodeInput>();
      const double tol = msg.payload.at("tol").get<double>();
      reply = {{"re", msg.msg_id}, {"output", solve_node(node, input, tol)}};
    }
  } catch (const std::exception& e) {
    type = MessageType::error;
    reply = {{"re", msg.msg_id}, {"message", e.what()}};
  }
  try {
    conn.send(type, reply);
  } catch (const IoError&) {
  }
}

void serve_connection(WorkerState& st, std::shared_ptr<Connection> conn) {
  std::thread compute;
  std::atomic<bool> busy{false};
  try {
    while (!st.stop) {
      auto m = conn->receive(std::chrono::milliseconds(200));
      if (!m) continue;
      switch (m->type) {
      case MessageType::hello: {
        json caps(std::vector<std::string>(st.capabilities.begin(), st.capabilities.end()));
        conn->send(MessageType::hello, {{"re", m->msg_id}, {"capabilities", caps}});
        break;
      }
      case MessageType::ping:
        conn->send(MessageType::pong, {{"re", m->msg_id}});
        break;
      case MessageType::solve: {
        const int n = ++st.solves;
        if (st.options.fail_after_solves > 0 && n == st.options.fail_after_solves) {
          if (st.options.fail_exits_process) std::_Exit(9);
          st.halt();
          break;
        }
        if (busy) {
          conn->send(MessageType::error, {{"re", m->msg_id}, {"message", "a solve is already running"}});
          break;
        }
        if (compute.joinable()) compute.join();
        busy = true;
        compute = std::thread([&st, &busy, c = conn, msg = std::move(*m)]() mutable {
          run_solve(st, *c, std::move(msg));
          busy = false;
        });
        break;
      }
      case MessageType::shutdown:
        st.halt();
        break;
      default:
        conn->send(MessageType::error, {{"re", m->msg_id}, {"message", "unexpected " + to_string(m->type)}});
      }
    }
  } catch (const ProtocolError& e) {
    try {
      conn->send(MessageType::error, {{"message", e.what()}});
    } catch (const IoError&) {
    }
    conn->shutdown();
  } catch (const IoError&) {
  }
  if (compute.joinable()) compute.join();
}

} // namespace

int worker_serve(const std::string& host, int port, const WorkerOptions& options,
                 const std::function<void(int)>& on_listening) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res); rc != 0)
    throw IoError("cannot resolve " + host + ": " + gai_strerror(rc));
  int lfd = ::socket(res->ai_family, res->ai_socktype | SOCK_CLOEXEC, res->ai_protocol);
  if (lfd < 0) {
    ::freeaddrinfo(res);
    throw IoError(sys_error("socket failed"));
  }
  int one = 1;
  ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(lfd, res->ai_addr, res->ai_addrlen) < 0 || ::listen(lfd, 16) < 0) {
    const std::string msg = sys_error("cannot listen on " + host + ":" + service);
    ::freeaddrinfo(res);
    ::close(lfd);
    throw IoError(msg);
  }
  ::freeaddrinfo(res);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(lfd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int bound = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                                     : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  if (on_listening) on_listening(bound);

  WorkerState st;
  st.options = options;
  st.capabilities = kinds_or_all(options.capabilities);
  std::vector<std::thread> threads;
  while (!st.stop) {
    pollfd p{lfd, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept4(lfd, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    set_nodelay(fd);
    auto conn = std::make_shared<Connection>(fd);
    {
      std::lock_guard lock(st.mu);
      if (st.stop) break;
      st.connections.push_back(conn);
    }
    threads.emplace_back(serve_connection, std::ref(st), conn);
  }
  ::close(lfd);
  st.halt();
  for (auto& t : threads) t.join();
  return 0;
}

// ------------------------------------------------------------------ Registry

std::string endpoint_name(const WorkerEndpoint& w) { return w.host + ":" + std::to_string(w.port); }

void to_json(json& j, const WorkerEndpoint& w) {
  j = {{"host", w.host}, {"port", w.port}, {"capabilities", w.capabilities}};
}

void from_json(const json& j, WorkerEndpoint& w) {
  w.host = j.at("host").get<std::string>();
  w.port = j.at("port").get<int>();
  w.capabilities = j.value("capabilities", std::vector<std::string>{});
  if (w.port <= 0 || w.port > 65535) throw ConfigError("worker port out of range");
}

WorkerRegistry load_registry(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  WorkerRegistry reg;
  try {
    const json& list = j.is_object() ? j.at("workers") : j;
    reg.workers = list.get<std::vector<WorkerEndpoint>>();
  } catch (const json::exception& e) {
    throw ConfigError("bad worker registry " + path.string() + ": " + e.what());
  }
  return reg;
}

WorkerRegistry resolve_registry(const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) return load_registry(*explicit_path);
  if (const char* env = std::getenv("WSDO_WORKERS"); env && *env) return load_registry(env);
  return {};
}

// --------------------------------------------------------------- Coordinator

struct Coordinator::Worker {
  WorkerEndpoint endpoint;
  std::unique_ptr<Connection> conn;
  std::set<std::string> capabilities;
  bool dead = false;
};

Coordinator::Coordinator(WorkerRegistry registry, CoordinatorOptions options)
    : registry_(std::move(registry)), options_(options) {
  for (const auto& ep : registry_.workers) {
    auto w = std::make_unique<Worker>();
    w->endpoint = ep;
    workers_.push_back(std::move(w));
  }
}

Coordinator::~Coordinator() = default;

void Coordinator::note(json event) {
  std::lock_guard lock(events_mu_);
  events_.push_back(std::move(event));
}

json Coordinator::events() {
  std::lock_guard lock(events_mu_);
  return events_;
}

int Coordinator::live_workers() {
  int n = 0;
  for (auto& w : workers_) n += ensure_connected(*w) ? 1 : 0;
  return n;
}

bool Coordinator::ensure_connected(Worker& w) {
  if (w.dead) return false;
  if (w.conn) return true;
  try {
    w.conn = Connection::connect(w.endpoint.host, w.endpoint.port, options_.connect_timeout);
    const auto id = w.conn->send(MessageType::hello, {{"role", "coordinator"}});
    const auto deadline = Clock::now() + options_.connect_timeout;
    while (true) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      auto m = w.conn->receive(std::max(left, std::chrono::milliseconds(0)));
      if (!m) throw IoError("no HELLO reply");
      if (m->type != MessageType::hello || m->payload.value("re", std::uint64_t{0}) != id) continue;
      const auto offered = m->payload.at("capabilities").get<std::vector<std::string>>();
      std::set<std::string> caps(offered.begin(), offered.end());
      if (!w.endpoint.capabilities.empty()) {
        std::set<std::string> both;
        for (const auto& c : w.endpoint.capabilities)
          if (caps.count(c)) both.insert(c);
        caps = both;
      }
      w.capabilities = caps;
      return true;
    }
  } catch (const Error& e) {
    w.conn.reset();
    w.dead = true;
    note({{"event", "worker_unreachable"}, {"worker", endpoint_name(w.endpoint)}, {"detail", e.what()}});
    return false;
  }
}

std::optional<NodeOutput> Coordinator::remote_solve(Worker& w, const SolveRequest& req, std::string& failure) {
  try {
    const auto id = w.conn->send(MessageType::solve,
                                 {{"node", *req.node}, {"input", req.input}, {"tol", req.tol}});
    const auto deadline = Clock::now() + options_.timeout;
    while (true) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (left.count() <= 0) {
        failure = "timeout";
        break;
      }
      auto m = w.conn->receive(left);
      if (!m) continue;
      if (m->payload.value("re", std::uint64_t{0}) != id) continue;
      if (m->type == MessageType::result) {
        NodeOutput out = m->payload.at("output").get<NodeOutput>();
        out.location = "worker " + endpoint_name(w.endpoint);
        return out;
      }
      if (m->type == MessageType::error) {
        failure = "error: " + m->payload.value("message", std::string("unspecified"));
        return std::nullopt; // the worker itself is fine
      }
    }
  } catch (const std::exception& e) {
    failure = e.what();
  }
  // Transport trouble or timeout: a late reply would be ambiguous, so drop the worker.
  w.conn.reset();
  w.dead = true;
  return std::nullopt;
}

std::vector<NodeOutput> Coordinator::dispatch(const std::vector<SolveRequest>& requests) {
  const std::size_t n = requests.size();
  std::vector<std::optional<NodeOutput>> results(n);
  std::vector<int> failures(n, 0);
  std::vector<std::set<std::size_t>> tried(n);
  std::set<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i) pending.insert(i);
  std::mutex mu;
  std::condition_variable cv;
  int busy = static_cast<int>(workers_.size()); // threads still connecting or solving

  auto eligible = [&](std::size_t task, std::size_t wi) {
    return failures[task] < 2 && !tried[task].count(wi) &&
           workers_[wi]->capabilities.count(requests[task].node->kind) > 0;
  };

  auto run = [&](std::size_t wi) {
    Worker& w = *workers_[wi];
    const bool ok = ensure_connected(w);
    std::unique_lock lock(mu);
    --busy;
    cv.notify_all();
    if (!ok) return;
    while (true) {
      auto it = std::find_if(pending.begin(), pending.end(), [&](std::size_t t) { return eligible(t, wi); });
      if (it == pending.end()) {
        if (busy == 0) return;
        cv.wait(lock);
        continue;
      }
      const std::size_t task = *it;
      pending.erase(it);
      tried[task].insert(wi);
      ++busy;
      lock.unlock();
      std::string failure;
      auto out = remote_solve(w, requests[task], failure);
      lock.lock();
      --busy;
      if (out) {
        results[task] = std::move(*out);
      } else {
        ++failures[task];
        pending.insert(task);
        note({{"event", failures[task] < 2 ? "retry" : "fallback"},
              {"node", requests[task].node->id},
              {"worker", endpoint_name(w.endpoint)},
              {"detail", failure}});
      }
      cv.notify_all();
      if (w.dead) return;
    }
  };

  std::vector<std::thread> threads;
  for (std::size_t wi = 0; wi < workers_.size(); ++wi) threads.emplace_back(run, wi);
  for (auto& t : threads) t.join();

  std::vector<SolveRequest> local;
  std::vector<std::size_t> local_idx;
  for (std::size_t i = 0; i < n; ++i)
    if (!results[i]) {
      local.push_back(requests[i]);
      local_idx.push_back(i);
    }
  if (!local.empty()) {
    if (!workers_.empty() && live_workers() == 0)
      note({{"event", "all_workers_down"}, {"detail", "solving in-process"}});
    auto solved = dispatch_local(local);
    for (std::size_t j = 0; j < solved.size(); ++j) {
      solved[j].location = failures[local_idx[j]] > 0 ? "local-fallback" : "local";
      results[local_idx[j]] = std::move(solved[j]);
    }
  }
  std::vector<NodeOutput> out;
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

Dispatcher Coordinator::dispatcher() {
  return [this](const std::vector<SolveRequest>& r) { return dispatch(r); };
}

void Coordinator::shutdown_workers() {
  for (auto& w : workers_)
    if (ensure_connected(*w)) {
      try {
        w->conn->send(MessageType::shutdown, json::object());
      } catch (const IoError&) {
      }
      w->conn.reset();
      w->dead = true;
    }
}

} // namespace wsdo
