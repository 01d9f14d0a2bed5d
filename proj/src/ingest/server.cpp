#include "rtdap/ingest/server.hpp"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/epoll.h>
#include <sys/eventfd.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <unordered_map>

#include "rtdap/core/error.hpp"

namespace rtdap::ingest {
namespace {

using Clock = std::chrono::steady_clock;
constexpr std::size_t kReadChunk = 64 * 1024;
// Reads per readiness event before yielding to other connections.
constexpr int kReadsPerEvent = 16;

}  // namespace

void IngestOptions::validate() const {
  if (workers < 1 || workers > 64) throw Error(Errc::InvalidConfig, "workers must be in 1..64");
  if (max_frame < 16 || max_frame > (64u << 20)) throw Error(Errc::InvalidConfig, "max frame must be in 16..64 MiB");
}

struct IngestServer::Worker {
  struct Conn {
    net::Socket sock;
    std::unique_ptr<Session> session;
  };

  IngestServer& server;
  int epfd = -1;
  int wakefd = -1;
  std::mutex mu;
  std::vector<std::pair<std::uint64_t, net::Socket>> incoming;
  std::unordered_map<int, Conn> conns;
  std::atomic<bool> draining{false};
  Clock::time_point deadline;
  std::thread thread;
  std::vector<char> buf = std::vector<char>(kReadChunk);

  explicit Worker(IngestServer& s) : server(s) {
    epfd = ::epoll_create1(EPOLL_CLOEXEC);
    wakefd = ::eventfd(0, EFD_NONBLOCK | EFD_CLOEXEC);
    if (epfd < 0 || wakefd < 0) throw Error(Errc::IoError, "epoll setup failed");
    epoll_event ev{};
    ev.events = EPOLLIN;
    ev.data.fd = wakefd;
    ::epoll_ctl(epfd, EPOLL_CTL_ADD, wakefd, &ev);
  }

  ~Worker() {
    if (thread.joinable()) thread.join();
    ::close(epfd);
    ::close(wakefd);
  }

  void wake() {
    std::uint64_t one = 1;
    [[maybe_unused]] auto n = ::write(wakefd, &one, sizeof one);
  }

  void hand_over(std::uint64_t id, net::Socket sock) {
    {
      std::lock_guard lock(mu);
      incoming.emplace_back(id, std::move(sock));
    }
    wake();
  }

  void adopt() {
    std::uint64_t drained;
    [[maybe_unused]] auto n = ::read(wakefd, &drained, sizeof drained);
    std::vector<std::pair<std::uint64_t, net::Socket>> fresh;
    {
      std::lock_guard lock(mu);
      fresh.swap(incoming);
    }
    for (auto& [id, sock] : fresh) {
      const int fd = sock.fd();
      epoll_event ev{};
      ev.events = EPOLLIN | EPOLLRDHUP;
      ev.data.fd = fd;
      if (::epoll_ctl(epfd, EPOLL_CTL_ADD, fd, &ev) != 0) {
        --server.counters_.active_connections;
        continue;
      }
      auto session = std::make_unique<Session>(id, server.store_, server.log_, server.counters_, server.opts_.max_frame);
      conns.emplace(fd, Conn{std::move(sock), std::move(session)});
    }
  }

  void drop(int fd) {
    ::epoll_ctl(epfd, EPOLL_CTL_DEL, fd, nullptr);
    conns.erase(fd);
    --server.counters_.active_connections;
  }

  // Returns false once the connection is gone.
  bool service(int fd, int max_reads) {
    auto it = conns.find(fd);
    if (it == conns.end()) return false;
    for (int i = 0; i < max_reads; ++i) {
      const auto n = ::recv(fd, buf.data(), buf.size(), 0);
      if (n > 0) {
        try {
          it->second.session->feed({buf.data(), static_cast<std::size_t>(n)});
        } catch (const std::exception&) {
          drop(fd);
          return false;
        }
        continue;
      }
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return true;
      if (n < 0 && errno == EINTR) continue;
      drop(fd);
      return false;
    }
    return true;
  }

  void run() {
    epoll_event events[64];
    while (true) {
      const int n = ::epoll_wait(epfd, events, 64, 50);
      for (int i = 0; i < n; ++i) {
        if (events[i].data.fd == wakefd) adopt();
        else service(events[i].data.fd, kReadsPerEvent);
      }
      if (!draining) continue;
      adopt();
      if (conns.empty()) break;
      if (Clock::now() >= deadline) {
        std::vector<int> fds;
        for (const auto& [fd, c] : conns) fds.push_back(fd);
        for (int fd : fds)
          if (service(fd, 1 << 20)) drop(fd);
        break;
      }
    }
  }
};

IngestServer::IngestServer(IngestOptions opts, tsdb::Store& store, log::MessageLog& log)
    : opts_(std::move(opts)), store_(store), log_(log) {
  opts_.validate();
  listener_ = net::Socket::listen(opts_.bind);
  listener_.set_nonblocking();
  port_ = listener_.local_port();
  for (int i = 0; i < opts_.workers; ++i) workers_.push_back(std::make_unique<Worker>(*this));
  rate_time_ = Clock::now();
}

IngestServer::~IngestServer() { stop(); }

void IngestServer::start() {
  if (started_) return;
  started_ = true;
  for (auto& w : workers_) w->thread = std::thread([w = w.get()] { w->run(); });
  acceptor_ = std::thread([this] { accept_loop(); });
}

void IngestServer::accept_loop() {
  std::size_t next_worker = 0;
  auto accept_pending = [&] {
    while (true) {
      const int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_NONBLOCK | SOCK_CLOEXEC);
      if (fd < 0) {
        if (errno == EINTR || errno == ECONNABORTED) continue;
        return;
      }
      ++counters_.connections_total;
      ++counters_.active_connections;
      workers_[next_worker++ % workers_.size()]->hand_over(next_conn_++, net::Socket(fd));
    }
  };
  while (!stopping_) {
    pollfd p{listener_.fd(), POLLIN, 0};
    if (::poll(&p, 1, 100) > 0) accept_pending();
  }
  // Connections already queued by the kernel still get served.
  accept_pending();
}

void IngestServer::stop() {
  if (stopping_.exchange(true)) return;
  if (!started_) return;
  if (acceptor_.joinable()) acceptor_.join();
  listener_.close();
  const auto deadline = Clock::now() + opts_.drain_timeout;
  for (auto& w : workers_) {
    w->deadline = deadline;
    w->draining = true;
    w->wake();
  }
  for (auto& w : workers_)
    if (w->thread.joinable()) w->thread.join();
}

IngestStats IngestServer::stats() {
  IngestStats s;
  s.total_accepted = counters_.accepted.load();
  s.total_rejected = counters_.rejected.load();
  s.active_connections = counters_.active_connections.load();
  s.connections_total = counters_.connections_total.load();
  s.frames = counters_.frames.load();
  s.bytes_in = counters_.bytes_in.load();
  s.protocol_errors = counters_.protocol_errors.load();
  std::lock_guard lock(rate_mu_);
  const auto now = Clock::now();
  const double dt = std::chrono::duration<double>(now - rate_time_).count();
  if (dt > 0) s.records_per_second = static_cast<double>(s.total_accepted - rate_count_) / dt;
  rate_time_ = now;
  rate_count_ = s.total_accepted;
  return s;
}

}  // namespace rtdap::ingest
