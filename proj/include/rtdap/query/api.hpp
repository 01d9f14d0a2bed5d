#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rtdap/net/socket.hpp"

namespace rtdap::tsdb {
class Store;
}
namespace rtdap::log {
class MessageLog;
}
namespace rtdap::ingest {
class IngestServer;
}
namespace rtdap::agg {
class Topology;
}

namespace rtdap::query {

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::vector<std::pair<std::string, std::string>> headers;
};

using Params = std::map<std::string, std::string>;

/// Whatever is running next to the store; absent parts report zeros.
struct StatsSources {
  log::MessageLog* log = nullptr;
  std::string group = "aggregation";
  ingest::IngestServer* ingest = nullptr;
  agg::Topology* topology = nullptr;
};

/// Endpoint handlers, independent of the HTTP transport.
class QueryApi {
 public:
  explicit QueryApi(tsdb::Store& store, StatsSources sources = {}) : store_(store), sources_(std::move(sources)) {}

  /// GET /tags?prefix=&limit=&cursor=
  Response tags(const Params& p) const;
  /// GET /series?tag=&from=&to=&res=raw|min|hour|day
  Response series(const Params& p) const;
  /// POST /upload with a CSV body
  Response upload(std::string_view body) const;
  /// GET /download?tag=&from=&to=
  Response download(const Params& p) const;
  /// GET /stats
  Response stats() const;

  static constexpr std::size_t kDefaultTagLimit = 1000;
  static constexpr std::size_t kMaxTagLimit = 10000;

 private:
  tsdb::Store& store_;
  StatsSources sources_;
};

/// cpp-httplib front end: the endpoints above, CORS headers, and the
/// dashboard's static files under /ui/.
class HttpServer {
 public:
  /// Binds immediately; throws Error(BindFailed).
  HttpServer(QueryApi& api, const net::Endpoint& bind, std::filesystem::path ui_dir = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  void start();
  void stop();
  std::uint16_t port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
};

}  // namespace rtdap::query
