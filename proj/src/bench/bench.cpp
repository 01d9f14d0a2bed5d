#include "rtdap/bench/bench.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "rtdap/agg/bolt.hpp"
#include "rtdap/core/error.hpp"
#include "rtdap/ingest/server.hpp"
#include "rtdap/log/message_log.hpp"
#include "rtdap/query/csv.hpp"
#include "rtdap/sim/flood.hpp"
#include "rtdap/tsdb/store.hpp"

#ifndef RTDAP_COMMIT
#define RTDAP_COMMIT "unknown"
#endif

namespace rtdap::bench {
namespace {

using Clock = std::chrono::steady_clock;
constexpr Timestamp kBase = 1380027600000;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string point_string(const Params& p) {
  std::string s;
  for (const auto& [k, v] : p) {
    if (!s.empty()) s += ';';
    s += k + '=' + v;
  }
  return s;
}

template <class T>
std::string str(T v) {
  if constexpr (std::is_same_v<T, double>) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
  } else {
    return std::to_string(v);
  }
}

class TempStoreDir {
 public:
  TempStoreDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("rtdap-bench-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempStoreDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::vector<TagId> register_tags(tsdb::Store& store, const std::string& stem, int n) {
  std::vector<TagId> ids;
  for (int i = 0; i < n; ++i) ids.push_back(store.register_tag(parse_tag("Bench::" + stem + "/T" + std::to_string(i))));
  return ids;
}

}  // namespace

Environment environment() {
  Environment e;
  e.commit = RTDAP_COMMIT;
#ifdef __VERSION__
  e.compiler = __VERSION__;
#endif
#ifdef NDEBUG
  e.build_type = "release";
#else
  e.build_type = "debug";
#endif
  utsname u{};
  if (::uname(&u) == 0) e.os = std::string(u.sysname) + " " + u.release + " " + u.machine;
  std::ifstream cpuinfo("/proc/cpuinfo");
  for (std::string line; std::getline(cpuinfo, line);) {
    if (line.rfind("model name", 0) == 0) {
      e.cpu = line.substr(line.find(':') + 2);
      break;
    }
  }
  e.cores = std::thread::hardware_concurrency();
  return e;
}

nlohmann::json to_json(const Environment& e) {
  return {{"commit", e.commit},   {"compiler", e.compiler}, {"buildType", e.build_type},
          {"os", e.os},           {"cpu", e.cpu},           {"cores", e.cores},
          {"referenceTestbed", "AMD Opteron 4171 HE VMs (reference only)"}};
}

std::vector<double> Report::values(const std::string& metric, const Params& where) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.metric != metric) continue;
    bool match = true;
    for (const auto& [k, v] : where) {
      auto it = r.params.find(k);
      if (it == r.params.end() || it->second != v) match = false;
    }
    if (match) out.push_back(r.value);
  }
  return out;
}

double Report::mean(const std::string& metric, const Params& where) const { return mean_of(values(metric, where)); }

std::string Report::csv() const {
  std::string out;
  out += "# scenario: " + scenario + "\n";
  out += "# config: " + config.dump() + "\n";
  out += "# seed: " + std::to_string(seed) + "\n";
  out += "# commit: " + env.commit + "\n";
  out += "# environment: " + to_json(env).dump() + "\n";
  for (const auto& n : notes) out += "# note: " + n + "\n";
  out += "scenario,point,rep,metric,value\n";
  for (const auto& r : rows) {
    out += query::csv_escape(scenario) + ',' + query::csv_escape(point_string(r.params)) + ',' + std::to_string(r.rep) +
           ',' + query::csv_escape(r.metric) + ',' + str(r.value) + '\n';
  }
  return out;
}

void Report::write_csv(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot write " + path.string());
  f << csv();
}

std::string Report::summary_csv() const {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : rows) {
    auto key = std::make_pair(point_string(r.params), r.metric);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(r.value);
  }
  std::string out = "scenario,point,metric,n,mean,min,max\n";
  for (const auto& key : order) {
    const auto& v = groups[key];
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    out += query::csv_escape(scenario) + ',' + query::csv_escape(key.first) + ',' + query::csv_escape(key.second) + ',' +
           std::to_string(v.size()) + ',' + str(mean_of(v)) + ',' + str(*lo) + ',' + str(*hi) + '\n';
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const double idx = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(idx);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (v[hi] - v[lo]) * (idx - static_cast<double>(lo));
}

// --- ingest ---------------------------------------------------------------

namespace {

double flood_once(int workers, const sim::FloodConfig& fc) {
  tsdb::Store store;
  log::MessageLog log({.partitions = 4});
  ingest::IngestOptions io;
  io.bind = {"127.0.0.1", 0};
  io.workers = workers;
  io.drain_timeout = std::chrono::milliseconds(200);
  ingest::IngestServer server(io, store, log);
  server.start();
  auto r = sim::run_flood(fc, {"127.0.0.1", server.port()}, [&] { return server.counters().accepted.load(); });
  server.stop();
  if (!r.error.empty()) throw Error(Errc::ConnectionLost, r.error);
  return r.records_per_second;
}

}  // namespace

Report ingest_scaling(const IngestScalingConfig& cfg) {
  Report rep;
  rep.scenario = "ingest-scaling";
  rep.seed = cfg.seed;
  rep.config = {{"workers", cfg.workers}, {"connections", cfg.connections}, {"payload", cfg.payload},
                {"seconds", cfg.seconds}, {"reps", cfg.reps}};
  for (int r = 0; r < cfg.reps; ++r) {
    for (int w : cfg.workers) {
      sim::FloodConfig fc;
      fc.connections = cfg.connections;
      fc.payload_bytes = cfg.payload;
      fc.duration = cfg.seconds;
      fc.seed = cfg.seed + static_cast<std::uint64_t>(r);
      rep.add({{"workers", str(w)}}, r, "records_per_second", flood_once(w, fc));
    }
  }
  return rep;
}

Report compression(const CompressionConfig& cfg) {
  Report rep;
  rep.scenario = "compression";
  rep.seed = cfg.seed;
  rep.config = {{"payloads", cfg.payloads}, {"bandwidthBps", cfg.bandwidth_bps}, {"connections", cfg.connections},
                {"workers", cfg.workers},   {"seconds", cfg.seconds},         {"reps", cfg.reps}};
  for (int r = 0; r < cfg.reps; ++r) {
    for (auto payload : cfg.payloads) {
      for (auto enc : {wire::Encoding::None, wire::Encoding::Deflate}) {
        sim::FloodConfig fc;
        fc.connections = cfg.connections;
        fc.payload_bytes = payload;
        fc.encoding = enc;
        fc.duration = cfg.seconds;
        fc.bandwidth_bps = cfg.bandwidth_bps;
        fc.seed = cfg.seed + static_cast<std::uint64_t>(r);
        rep.add({{"payload", str(payload)}, {"enc", std::string(wire::to_string(enc))}}, r, "records_per_second",
                flood_once(cfg.workers, fc));
      }
    }
  }
  if (auto c = crossover(rep)) rep.notes.push_back("crossover payload " + std::to_string(*c) + " bytes");
  else rep.notes.push_back("no crossover in the measured payloads");
  return rep;
}

std::optional<std::size_t> crossover(const Report& r) {
  std::vector<std::size_t> payloads;
  for (const auto& m : r.rows) {
    const auto p = std::stoull(m.params.at("payload"));
    if (std::find(payloads.begin(), payloads.end(), p) == payloads.end()) payloads.push_back(p);
  }
  std::sort(payloads.begin(), payloads.end());
  std::optional<std::size_t> best;
  for (auto it = payloads.rbegin(); it != payloads.rend(); ++it) {
    const double none = r.mean("records_per_second", {{"payload", str(*it)}, {"enc", "none"}});
    const double defl = r.mean("records_per_second", {{"payload", str(*it)}, {"enc", "deflate"}});
    if (defl >= none) best = *it;
    else break;
  }
  return best;
}

// --- store ----------------------------------------------------------------

Report write_batch(const WriteBatchConfig& cfg) {
  Report rep;
  rep.scenario = "write-batch";
  rep.seed = cfg.seed;
  rep.config = {{"batches", cfg.batches}, {"records", cfg.records},    {"tags", cfg.tags},
                {"reps", cfg.reps},       {"fileBacked", cfg.file_backed}, {"opLatencyUs", cfg.op_latency.count()}};
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> val(0, 100);
  for (int r = 0; r < cfg.reps; ++r) {
    for (auto batch : cfg.batches) {
      TempStoreDir dir;
      tsdb::StoreOptions so;
      if (cfg.file_backed) so.dir = dir.path();
      so.op_latency = cfg.op_latency;
      tsdb::Store store(so);
      auto ids = register_tags(store, "W", cfg.tags);
      std::vector<Sample> records;
      records.reserve(cfg.records);
      for (std::size_t i = 0; i < cfg.records; ++i)
        records.push_back({ids[i % ids.size()], kBase + i * 100, val(rng), 0});
      const auto t0 = Clock::now();
      for (std::size_t i = 0; i < records.size(); i += batch)
        store.put_batch(std::span(records).subspan(i, std::min(batch, records.size() - i)));
      const double secs = seconds_since(t0);
      rep.add({{"batch", str(batch)}}, r, "records_per_second", static_cast<double>(records.size()) / secs);
    }
  }
  return rep;
}

Report scan_window(const ScanWindowConfig& cfg) {
  Report rep;
  rep.scenario = "scan-window";
  rep.seed = cfg.seed;
  rep.config = {{"minutes", cfg.minutes}, {"days", cfg.days}, {"intervalSeconds", cfg.interval_seconds},
                {"queries", cfg.queries}, {"distinctWindows", cfg.distinct_windows},
                {"cacheRows", cfg.cache_rows}, {"reps", cfg.reps}};
  TempStoreDir dir;
  tsdb::StoreOptions so;
  so.dir = dir.path();
  tsdb::Store store(so);
  const auto tag = register_tags(store, "S", 1).front();
  const Timestamp span = static_cast<Timestamp>(cfg.days) * 86400000;
  const Timestamp step = static_cast<Timestamp>(cfg.interval_seconds) * 1000;
  {
    std::vector<Sample> batch;
    for (Timestamp t = 0; t < span; t += step) {
      batch.push_back({tag, kBase + t, static_cast<double>(t / step), 0});
      if (batch.size() == 5000) {
        store.put_batch(batch);
        batch.clear();
      }
    }
    store.put_batch(batch);
    store.flush();
    store.compact();
  }
  std::mt19937_64 rng(cfg.seed);
  for (int r = 0; r < cfg.reps; ++r) {
    for (int minutes : cfg.minutes) {
      const Timestamp w = static_cast<Timestamp>(minutes) * 60000;
      std::vector<Timestamp> pool;
      for (int i = 0; i < cfg.distinct_windows; ++i) pool.push_back(kBase + (rng() % ((span - w) / 60000)) * 60000);
      std::vector<std::size_t> picks(cfg.queries);
      for (auto& p : picks) p = rng() % pool.size();
      for (bool cached : cfg.cache) {
        store.configure_cache(0);
        store.configure_cache(cached ? cfg.cache_rows : 0);
        double total = 0, rows = 0, seg = 0;
        for (auto p : picks) {
          tsdb::ScanStats st;
          const auto t0 = Clock::now();
          auto got = store.scan_raw(tag, pool[p], pool[p] + w, &st);
          total += seconds_since(t0);
          rows += static_cast<double>(st.rows);
          seg += static_cast<double>(st.segment_rows);
          if (got.empty()) throw Error(Errc::CorruptData, "bench fixture scan came back empty");
        }
        const double n = static_cast<double>(picks.size());
        Params pt{{"minutes", str(minutes)}, {"cache", cached ? "on" : "off"}};
        rep.add(pt, r, "mean_latency_us", total / n * 1e6);
        rep.add(pt, r, "rows_read", rows / n);
        rep.add(pt, r, "segment_rows", seg / n);
      }
    }
  }
  store.configure_cache(0);
  return rep;
}

// --- aggregation ----------------------------------------------------------

AggregationRun run_aggregation(const AggregationPoint& p) {
  tsdb::StoreOptions so;
  so.op_latency = p.op_latency;
  tsdb::Store store(so);
  log::MessageLog log({.partitions = 1});
  auto ids = register_tags(store, "A", p.tags);
  agg::TopologyOptions to;
  to.max_queue = p.max_queue;
  to.idle_wait = std::chrono::milliseconds(5);
  agg::Topology topo(log, store, to);
  topo.start();

  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> appended{0};
  const auto t0 = Clock::now();
  std::thread feeder([&] {
    std::uint64_t sent = 0;
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> val(0, 100);
    std::vector<Sample> chunk;
    while (!stop) {
      const auto due = static_cast<std::uint64_t>(seconds_since(t0) * p.rate);
      chunk.clear();
      for (; sent < due; ++sent)
        chunk.push_back({ids[sent % ids.size()], kBase + static_cast<Timestamp>(double(sent) * 1000.0 / p.rate),
                         val(rng), 0});
      if (!chunk.empty()) log.append_batch(chunk);
      appended = sent;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  });

  AggregationRun run;
  auto next = t0 + p.sample_every;
  const auto end = t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(p.seconds));
  while (next <= end) {
    std::this_thread::sleep_until(next);
    run.lag_samples.push_back(log.total_lag(to.group));
    next += p.sample_every;
  }
  std::this_thread::sleep_until(end);
  stop = true;
  feeder.join();
  run.metrics = topo.metrics();
  run.batch_seconds = topo.batch_seconds();
  run.appended = appended;
  run.seconds = seconds_since(t0);
  topo.stop();
  if (auto e = topo.error()) std::rethrow_exception(e);
  return run;
}

double full_batch_seconds(const AggregationPoint& p, int reps) {
  tsdb::StoreOptions so;
  so.op_latency = p.op_latency;
  tsdb::Store store(so);
  log::MessageLog log({.partitions = 1});
  log.register_group("calibrate");
  auto ids = register_tags(store, "A", p.tags);
  agg::Bolt bolt(store, log, "calibrate", 0);
  std::vector<double> times;
  std::uint64_t seq = 0;
  for (int r = 0; r < reps; ++r) {
    std::vector<Sample> batch;
    for (std::size_t i = 0; i < p.max_queue; ++i, ++seq)
      batch.push_back({ids[seq % ids.size()], kBase + static_cast<Timestamp>(double(seq) * 1000.0 / p.rate), 1.0, 0});
    log.append_batch(batch);
    auto records = log.poll("calibrate", 0, p.max_queue);
    const auto t0 = Clock::now();
    bolt.process(records);
    times.push_back(seconds_since(t0));
  }
  return percentile(times, 0.5);
}

Report aggregation(const AggregationConfig& cfg) {
  Report rep;
  rep.scenario = "aggregation";
  rep.seed = cfg.seed;
  rep.config = {{"rates", cfg.rates},     {"maxQueues", cfg.max_queues}, {"seconds", cfg.seconds},
                {"tags", cfg.tags},       {"opLatencyUs", cfg.op_latency.count()}, {"reps", cfg.reps}};
  for (int r = 0; r < cfg.reps; ++r) {
    for (auto mq : cfg.max_queues) {
      for (double rate : cfg.rates) {
        AggregationPoint p;
        p.rate = rate;
        p.max_queue = mq;
        p.seconds = cfg.seconds;
        p.tags = cfg.tags;
        p.op_latency = cfg.op_latency;
        p.seed = cfg.seed + static_cast<std::uint64_t>(r);
        auto run = run_aggregation(p);
        const auto& b = run.metrics.total;
        auto ms = [](std::chrono::nanoseconds d) { return std::chrono::duration<double, std::milli>(d).count(); };
        Params pt{{"rate", str(rate)}, {"max_queue", str(mq)}};
        rep.add(pt, r, "total_exec_ms", ms(b.total_exec));
        // Bolt time for everything offered, at the per-record cost measured;
        // exceeds the run length once the pipeline cannot keep up.
        if (b.records > 0)
          rep.add(pt, r, "projected_exec_ms",
                  ms(b.total_exec) / static_cast<double>(b.records) * static_cast<double>(run.appended));
        rep.add(pt, r, "scan_ms", ms(b.scan));
        rep.add(pt, r, "write_ms", ms(b.write));
        rep.add(pt, r, "compute_ms", ms(b.compute));
        rep.add(pt, r, "avg_queue", b.avg_queue_size);
        rep.add(pt, r, "batches", static_cast<double>(b.batches));
        rep.add(pt, r, "records", static_cast<double>(b.records));
        rep.add(pt, r, "final_lag", run.lag_samples.empty() ? 0.0 : static_cast<double>(run.lag_samples.back()));
        rep.add(pt, r, "p95_batch_ms", percentile(run.batch_seconds, 0.95) * 1e3);
      }
    }
  }
  // Saturation: lowest offered rate whose final lag exceeds what one
  // second of service plus a full queue could leave behind.
  for (auto mq : cfg.max_queues) {
    std::optional<double> sat;
    for (double rate : cfg.rates) {
      const double lag = rep.mean("final_lag", {{"rate", str(rate)}, {"max_queue", str(mq)}});
      if (lag > rate + 2.0 * static_cast<double>(mq)) {
        sat = rate;
        break;
      }
    }
    rep.notes.push_back("max_queue " + std::to_string(mq) + ": " +
                        (sat ? "lag grows from " + str(*sat) + " records/s" : std::string("drains at every rate")));
  }
  return rep;
}

}  // namespace rtdap::bench
