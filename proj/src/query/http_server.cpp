#include <httplib.h>

#include <thread>

#include "rtdap/core/error.hpp"
#include "rtdap/query/api.hpp"

namespace rtdap::query {
namespace {

Params params_of(const httplib::Request& req) {
  Params p;
  for (const auto& [k, v] : req.params) p.emplace(k, v);
  return p;
}

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  for (const auto& [k, v] : r.headers) res.set_header(k, v);
  res.set_content(r.body, r.content_type);
}

constexpr const char* kNoDashboard =
    "<!doctype html><title>rtdap</title><p>Dashboard not built. The API is served at /tags, /series, "
    "/upload, /download and /stats.</p>";

}  // namespace

struct HttpServer::Impl {
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(QueryApi& api, const net::Endpoint& bind, std::filesystem::path ui_dir)
    : impl_(std::make_unique<Impl>()) {
  auto& svr = impl_->server;
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Expose-Headers", "X-Next-Cursor"}});
  svr.set_payload_max_length(512u << 20);
  svr.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  svr.Get("/tags", [&api](const httplib::Request& req, httplib::Response& res) { send(res, api.tags(params_of(req))); });
  svr.Get("/series",
          [&api](const httplib::Request& req, httplib::Response& res) { send(res, api.series(params_of(req))); });
  svr.Post("/upload", [&api](const httplib::Request& req, httplib::Response& res) { send(res, api.upload(req.body)); });
  svr.Get("/download",
          [&api](const httplib::Request& req, httplib::Response& res) { send(res, api.download(params_of(req))); });
  svr.Get("/stats", [&api](const httplib::Request&, httplib::Response& res) { send(res, api.stats()); });

  std::error_code ec;
  if (!ui_dir.empty() && std::filesystem::is_directory(ui_dir, ec)) {
    svr.set_mount_point("/ui", ui_dir.string());
  } else {
    svr.Get(R"(/ui/?.*)", [](const httplib::Request&, httplib::Response& res) { res.set_content(kNoDashboard, "text/html"); });
  }
  svr.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/ui/"); });

  if (bind.port == 0) {
    const int port = svr.bind_to_any_port(bind.host);
    if (port <= 0) throw Error(Errc::BindFailed, "cannot bind http " + bind.str());
    port_ = static_cast<std::uint16_t>(port);
  } else {
    if (!svr.bind_to_port(bind.host, bind.port)) throw Error(Errc::BindFailed, "cannot bind http " + bind.str());
    port_ = bind.port;
  }
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
  if (impl_->thread.joinable()) return;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace rtdap::query
