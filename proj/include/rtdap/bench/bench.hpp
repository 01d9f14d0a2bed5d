#pragma once

#include <chrono>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "rtdap/agg/topology.hpp"

namespace rtdap::bench {

using Params = std::map<std::string, std::string>;

struct Environment {
  std::string commit;
  std::string compiler;
  std::string build_type;
  std::string os;
  std::string cpu;
  unsigned cores = 0;
};

Environment environment();
nlohmann::json to_json(const Environment& e);

struct Measurement {
  Params params;
  int rep = 0;
  std::string metric;
  double value = 0;
};

struct Report {
  std::string scenario;
  nlohmann::json config;
  std::uint64_t seed = 0;
  Environment env = environment();
  std::vector<Measurement> rows;
  std::vector<std::string> notes;

  void add(Params p, int rep, std::string metric, double value) {
    rows.push_back({std::move(p), rep, std::move(metric), value});
  }
  /// Values of `metric` on rows whose params include every entry of `where`.
  std::vector<double> values(const std::string& metric, const Params& where = {}) const;
  double mean(const std::string& metric, const Params& where = {}) const;

  /// '#'-prefixed metadata lines, then scenario,point,rep,metric,value.
  std::string csv() const;
  void write_csv(const std::filesystem::path& path) const;
  /// scenario,point,metric,n,mean,min,max: one line per (point, metric)
  /// across reps, for plotting.
  std::string summary_csv() const;
};

double mean_of(const std::vector<double>& v);
double percentile(std::vector<double> v, double q);

struct IngestScalingConfig {
  std::vector<int> workers{1, 2, 4};
  int connections = 7;
  std::size_t payload = 64;
  double seconds = 3;
  int reps = 3;
  std::uint64_t seed = 1;
};
/// Metric records_per_second (server-accepted, after warmup) per workers.
Report ingest_scaling(const IngestScalingConfig& cfg);

struct CompressionConfig {
  std::vector<std::size_t> payloads{64, 1024, 8192, 65536};
  double bandwidth_bps = 100e6;
  int connections = 4;
  int workers = 2;
  double seconds = 3;
  int reps = 3;
  std::uint64_t seed = 1;
};
/// records_per_second per (payload, enc); a note gives the crossover, the
/// smallest payload from which deflate stays ahead.
Report compression(const CompressionConfig& cfg);
/// Smallest payload p such that deflate >= none for p and every larger size.
std::optional<std::size_t> crossover(const Report& r);

struct WriteBatchConfig {
  std::vector<std::size_t> batches{1, 100, 2000};
  std::size_t records = 20000;
  int tags = 10;
  int reps = 3;
  bool file_backed = true;
  std::chrono::microseconds op_latency{0};
  std::uint64_t seed = 1;
};
/// records_per_second of Store::put_batch per batch size.
Report write_batch(const WriteBatchConfig& cfg);

struct ScanWindowConfig {
  std::vector<int> minutes{1, 10, 60, 960, 2400};
  int days = 30;
  int interval_seconds = 10;
  int queries = 200;
  /// Windows are drawn from this many distinct start points so a cache can
  /// help on repeats.
  int distinct_windows = 20;
  std::vector<bool> cache{false, true};
  std::size_t cache_rows = 8192;
  int reps = 3;
  std::uint64_t seed = 1;
};
/// mean_latency_us, rows_read, segment_rows per (minutes, cache).
Report scan_window(const ScanWindowConfig& cfg);

struct AggregationRun {
  std::vector<std::uint64_t> lag_samples;
  std::vector<double> batch_seconds;
  agg::TopologyMetrics metrics;
  std::uint64_t appended = 0;
  double seconds = 0;
};

struct AggregationPoint {
  double rate = 1000;  // records/s offered
  std::size_t max_queue = 200;
  double seconds = 5;
  int tags = 20;
  std::chrono::microseconds op_latency{100};
  std::chrono::milliseconds sample_every{250};
  std::uint64_t seed = 1;
};
/// One spout/bolt pipeline fed at a fixed rate from a feeder thread.
AggregationRun run_aggregation(const AggregationPoint& p);
/// Median seconds for the bolt to process one full batch of max_queue
/// records under the same latency and tag mix.
double full_batch_seconds(const AggregationPoint& p, int reps = 5);

struct AggregationConfig {
  std::vector<double> rates{200, 600, 1200, 2000};
  std::vector<std::size_t> max_queues{20, 50, 100, 200};
  double seconds = 5;
  int tags = 20;
  std::chrono::microseconds op_latency{100};
  int reps = 3;
  std::uint64_t seed = 1;
};
/// total/scan/write/compute ms, projected_exec_ms, avg_queue, final_lag and
/// p95_batch_ms per (rate, max_queue); notes give the measured saturation
/// rate per max_queue.
Report aggregation(const AggregationConfig& cfg);

}  // namespace rtdap::bench
