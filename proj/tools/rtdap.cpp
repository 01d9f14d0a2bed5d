// rtdap command line: server, load generators, benchmarks, offline jobs.
#include <CLI11.hpp>
#include <csignal>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <thread>

#include "rtdap/agg/topology.hpp"
#include "rtdap/analytics/window_job.hpp"
#include "rtdap/bench/bench.hpp"
#include "rtdap/core/error.hpp"
#include "rtdap/ingest/server.hpp"
#include "rtdap/log/message_log.hpp"
#include "rtdap/query/api.hpp"
#include "rtdap/sim/flood.hpp"
#include "rtdap/sim/source.hpp"
#include "rtdap/tsdb/store.hpp"

using namespace rtdap;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw Error(Errc::IoError, "cannot read " + p.string());
  return nlohmann::json::parse(f);
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream f(p, std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot write " + p.string());
  f << j.dump(2) << '\n';
}

template <class T>
std::vector<T> split_list(const std::string& s) {
  std::vector<T> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, double>) out.push_back(std::stod(item));
    else if constexpr (std::is_same_v<T, int>) out.push_back(std::stoi(item));
    else out.push_back(static_cast<T>(std::stoull(item)));
  }
  if (out.empty()) throw Error(Errc::InvalidConfig, "empty list '" + s + "'");
  return out;
}

tsdb::StoreOptions store_options(const fs::path& data) {
  tsdb::StoreOptions so;
  if (!data.empty()) so.dir = data / "store";
  return so;
}

log::LogOptions log_options(const fs::path& data, std::uint32_t partitions) {
  log::LogOptions lo;
  lo.partitions = partitions;
  if (!data.empty()) {
    lo.durability = log::Durability::File;
    lo.dir = data / "log";
  }
  return lo;
}

// Blocks until SIGINT or SIGTERM.
void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

void block_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rtdap: real-time data analytics platform"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "ingest server, aggregation topology and query API");
  std::string data_dir, bind = "0.0.0.0:7000", http_bind = "0.0.0.0:8080", ui_dir = "ui/dist", group = "aggregation";
  std::string job_file, model_file;
  int workers = 4;
  std::uint32_t partitions = 4;
  std::size_t max_frame = 1u << 20, max_queue = 200;
  serve->add_option("--data", data_dir, "data directory (empty: in memory)");
  serve->add_option("--bind", bind, "ingest endpoint");
  serve->add_option("--workers", workers, "ingest worker threads");
  serve->add_option("--partitions", partitions, "log partitions");
  serve->add_option("--max-frame", max_frame, "largest accepted frame body in bytes");
  serve->add_option("--max-queue", max_queue, "aggregation batch cap");
  serve->add_option("--group", group, "aggregation consumer group");
  serve->add_option("--http-bind", http_bind, "query API endpoint");
  serve->add_option("--ui-dir", ui_dir, "dashboard bundle served at /ui/");
  serve->add_option("--job", job_file, "analytics job spec (JSON)");
  serve->add_option("--model", model_file, "fitted model for --job");

  // sim
  auto* simc = app.add_subcommand("sim", "simulated data source");
  std::string sim_config, target = "127.0.0.1:7000";
  simc->add_option("--config", sim_config, "source config (JSON)")->required();
  simc->add_option("--target", target, "ingest endpoint");

  // flood
  auto* flood = app.add_subcommand("flood", "saturating load generator");
  sim::FloodConfig fc;
  std::string flood_enc = "none", flood_target = "127.0.0.1:7000";
  double cap_mbps = 0;
  flood->add_option("--payload", fc.payload_bytes, "value bytes per record");
  flood->add_option("--enc", flood_enc, "none|deflate");
  flood->add_option("--conns", fc.connections, "connections");
  flood->add_option("--secs", fc.duration, "duration in seconds");
  flood->add_option("--cap", cap_mbps, "shared bandwidth cap in Mbit/s (0 = none)");
  flood->add_option("--seed", fc.seed, "padding seed");
  flood->add_option("--target", flood_target, "ingest endpoint");

  // bench
  auto* bench = app.add_subcommand("bench", "benchmark scenarios");
  std::string scenario, out = "report.csv", summary;
  std::string b_workers = "1,2,4", b_payloads = "64,1024,8192,65536", b_batches = "1,100,2000",
              b_mins = "1,10,60,960,2400", b_cache = "both", b_rates = "200,600,1200,2000", b_queues = "20,50,100,200";
  int reps = 3;
  double secs = 3, b_cap_mbps = 100;
  std::uint64_t seed = 1;
  bench->add_option("scenario", scenario, "ingest-scaling|compression|write-batch|scan-window|aggregation")
      ->required()
      ->check(CLI::IsMember({"ingest-scaling", "compression", "write-batch", "scan-window", "aggregation"}));
  bench->add_option("--out", out, "CSV report path");
  bench->add_option("--summary", summary, "per-point summary CSV path");
  bench->add_option("--reps", reps, "repetitions per point (>= 3)")->check(CLI::Range(3, 1000));
  bench->add_option("--secs", secs, "seconds per run");
  bench->add_option("--seed", seed, "seed");
  bench->add_option("--workers", b_workers, "ingest-scaling worker counts");
  bench->add_option("--payloads", b_payloads, "compression payload sizes");
  bench->add_option("--cap", b_cap_mbps, "compression bandwidth cap, Mbit/s");
  bench->add_option("--batch", b_batches, "write-batch sizes");
  bench->add_option("--mins", b_mins, "scan-window widths in minutes");
  bench->add_option("--cache", b_cache, "on|off|both");
  bench->add_option("--rate", b_rates, "aggregation offered rates, records/s");
  bench->add_option("--max-queue", b_queues, "aggregation max-queue values");

  // analytics
  auto* analytics = app.add_subcommand("analytics", "offline PLS jobs");
  analytics->require_subcommand(1);
  auto* fit = analytics->add_subcommand("fit", "fit a model on stored history");
  auto* run = analytics->add_subcommand("run", "replay a job over stored history");
  std::string a_data, a_job, a_model;
  Timestamp a_from = 0, a_to = 0;
  for (auto* c : {fit, run}) {
    c->add_option("--data", a_data, "data directory")->required();
    c->add_option("--job", a_job, "job spec (JSON)")->required();
    c->add_option("--model", a_model, "model file")->required();
    c->add_option("--from", a_from, "start, UTC ms")->required();
    c->add_option("--to", a_to, "end, UTC ms")->required();
  }

  // rebuild
  auto* rebuild = app.add_subcommand("rebuild", "recompute aggregates from raw rows");
  std::string r_data;
  std::uint32_t r_first = 1, r_last = std::numeric_limits<std::uint32_t>::max();
  Timestamp r_from = 0, r_to = 253402300800000;  // year 10000
  rebuild->add_option("--data", r_data, "data directory")->required();
  rebuild->add_option("--first-tag", r_first, "first tag id");
  rebuild->add_option("--last-tag", r_last, "last tag id");
  rebuild->add_option("--from", r_from, "start, UTC ms");
  rebuild->add_option("--to", r_to, "end, UTC ms");

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve->parsed()) {
      block_signals();
      tsdb::Store store(store_options(data_dir));
      log::MessageLog log(log_options(data_dir, partitions));
      agg::TopologyOptions to;
      to.group = group;
      to.max_queue = max_queue;
      agg::Topology topo(log, store, to);
      ingest::IngestOptions io;
      io.bind = net::Endpoint::parse(bind);
      io.workers = workers;
      io.max_frame = max_frame;
      ingest::IngestServer ingest(io, store, log);
      query::QueryApi api(store, {&log, group, &ingest, &topo});
      query::HttpServer http(api, net::Endpoint::parse(http_bind), ui_dir);

      std::optional<analytics::LogSink> sink;
      std::optional<analytics::WindowJob> job;
      analytics::SystemClock clock;
      std::atomic<bool> stop_job{false};
      std::thread job_thread;
      if (!job_file.empty()) {
        if (model_file.empty()) throw Error(Errc::InvalidConfig, "--job needs --model");
        sink.emplace(log);
        job.emplace(analytics::job_from_json(read_json(job_file)),
                    analytics::model_from_json(read_json(model_file)), store, *sink);
      }

      topo.start();
      ingest.start();
      http.start();
      if (job) {
        job_thread = std::thread([&] {
          run_window_job(*job, clock, clock.now(), std::numeric_limits<Timestamp>::max() / 4, &stop_job);
        });
      }
      std::cerr << "ingest on port " << ingest.port() << ", http on port " << http.port() << "\n";
      wait_for_signal();
      std::cerr << "shutting down\n";
      stop_job = true;
      if (job_thread.joinable()) job_thread.join();
      http.stop();
      ingest.stop();
      topo.wait_drained(std::chrono::seconds(5));
      topo.stop();
      store.flush();
      return 0;
    }

    if (simc->parsed()) {
      auto cfg = sim::source_from_json(read_json(sim_config));
      auto r = sim::run_source(cfg, net::Endpoint::parse(target));
      std::cout << nlohmann::json{{"defined", r.defined}, {"sent", r.sent}, {"seconds", r.seconds}, {"error", r.error}}
                << "\n";
      return r.error.empty() ? 0 : 1;
    }

    if (flood->parsed()) {
      if (flood_enc != "none" && flood_enc != "deflate") throw Error(Errc::InvalidConfig, "--enc must be none or deflate");
      fc.encoding = flood_enc == "deflate" ? wire::Encoding::Deflate : wire::Encoding::None;
      fc.bandwidth_bps = cap_mbps * 1e6;
      auto r = sim::run_flood(fc, net::Endpoint::parse(flood_target));
      std::cout << nlohmann::json{{"records", r.records},
                                  {"seconds", r.seconds},
                                  {"recordsPerSecond", r.records_per_second},
                                  {"payloadBytesPerSecond", r.payload_bytes_per_second},
                                  {"wireBytes", r.wire_bytes},
                                  {"frameBytes", r.frame_bytes},
                                  {"error", r.error}}
                << "\n";
      return r.error.empty() ? 0 : 1;
    }

    if (bench->parsed()) {
      bench::Report report;
      if (scenario == "ingest-scaling") {
        bench::IngestScalingConfig c;
        c.workers = split_list<int>(b_workers);
        c.seconds = secs;
        c.reps = reps;
        c.seed = seed;
        report = bench::ingest_scaling(c);
      } else if (scenario == "compression") {
        bench::CompressionConfig c;
        c.payloads = split_list<std::size_t>(b_payloads);
        c.bandwidth_bps = b_cap_mbps * 1e6;
        c.seconds = secs;
        c.reps = reps;
        c.seed = seed;
        report = bench::compression(c);
      } else if (scenario == "write-batch") {
        bench::WriteBatchConfig c;
        c.batches = split_list<std::size_t>(b_batches);
        c.reps = reps;
        c.seed = seed;
        report = bench::write_batch(c);
      } else if (scenario == "scan-window") {
        bench::ScanWindowConfig c;
        c.minutes = split_list<int>(b_mins);
        if (b_cache == "on") c.cache = {true};
        else if (b_cache == "off") c.cache = {false};
        c.reps = reps;
        c.seed = seed;
        report = bench::scan_window(c);
      } else {
        bench::AggregationConfig c;
        c.rates = split_list<double>(b_rates);
        c.max_queues = split_list<std::size_t>(b_queues);
        c.seconds = secs;
        c.reps = reps;
        c.seed = seed;
        report = bench::aggregation(c);
      }
      report.write_csv(out);
      if (!summary.empty()) {
        std::ofstream f(summary, std::ios::trunc);
        if (!f) throw Error(Errc::IoError, "cannot write " + summary);
        f << report.summary_csv();
      }
      for (const auto& n : report.notes) std::cout << n << "\n";
      std::cout << "wrote " << report.rows.size() << " rows to " << out << "\n";
      return 0;
    }

    if (fit->parsed() || run->parsed()) {
      tsdb::Store store(store_options(a_data));
      auto spec = analytics::job_from_json(read_json(a_job));
      if (fit->parsed()) {
        auto model = analytics::fit_job(store, spec, a_from, a_to);
        write_json(a_model, analytics::model_to_json(model));
        std::cout << "fitted " << model.components() << " components on " << model.features() << " inputs\n";
        return 0;
      }
      analytics::StoreSink sink(store);
      analytics::WindowJob job(spec, analytics::model_from_json(read_json(a_model)), store, sink);
      analytics::ManualClock clock(a_from);
      auto st = run_window_job(job, clock, a_from, a_to - a_from);
      store.flush();
      std::cout << nlohmann::json{{"ticks", st.ticks}, {"emitted", st.emitted}, {"skipped", st.skipped}} << "\n";
      return 0;
    }

    if (rebuild->parsed()) {
      tsdb::Store store(store_options(r_data));
      auto n = store.rebuild_aggregates(TagId{r_first}, TagId{r_last}, r_from, r_to);
      store.flush();
      std::cout << "rebuilt " << n << " cells\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "rtdap: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
