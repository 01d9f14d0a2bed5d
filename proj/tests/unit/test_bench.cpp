#include <doctest.h>

#include "rtdap/bench/bench.hpp"
#include "rtdap/query/csv.hpp"

using namespace rtdap;
using namespace rtdap::bench;

TEST_CASE("percentile and mean") {
  CHECK(percentile({}, 0.5) == 0);
  CHECK(percentile({3, 1, 2}, 0.5) == 2);
  CHECK(percentile({1, 2, 3, 4, 5}, 0.95) == doctest::Approx(4.8));
  CHECK(mean_of({1, 2, 3, 6}) == 3);
}

TEST_CASE("report csv carries metadata and one row per measurement") {
  Report r;
  r.scenario = "demo";
  r.seed = 9;
  r.config = {{"k", 1}};
  r.add({{"payload", "64"}, {"enc", "none"}}, 0, "records_per_second", 1234.5);
  r.add({{"payload", "64"}, {"enc", "deflate"}}, 0, "records_per_second", 1000);
  r.notes.push_back("hello");
  const auto text = r.csv();
  CHECK(text.find("# scenario: demo\n") == 0);
  CHECK(text.find("# seed: 9\n") != std::string::npos);
  CHECK(text.find("# commit: ") != std::string::npos);
  CHECK(text.find("# note: hello\n") != std::string::npos);
  CHECK(text.find("scenario,point,rep,metric,value\n") != std::string::npos);
  CHECK(text.find("demo,enc=none;payload=64,0,records_per_second,1234.5\n") != std::string::npos);
  CHECK(r.values("records_per_second", {{"enc", "deflate"}}) == std::vector<double>{1000});
  CHECK(r.mean("records_per_second", {{"payload", "64"}}) == doctest::Approx(1117.25));
  CHECK_FALSE(environment().commit.empty());
  r.add({{"payload", "64"}, {"enc", "none"}}, 1, "records_per_second", 1000);
  const auto sum = r.summary_csv();
  CHECK(sum.find("scenario,point,metric,n,mean,min,max\n") == 0);
  CHECK(sum.find("demo,enc=none;payload=64,records_per_second,2,1117.25,1000,1234.5\n") != std::string::npos);
}

TEST_CASE("crossover is the smallest payload from which deflate stays ahead") {
  Report r;
  auto add = [&](int payload, double none, double defl) {
    r.add({{"payload", std::to_string(payload)}, {"enc", "none"}}, 0, "records_per_second", none);
    r.add({{"payload", std::to_string(payload)}, {"enc", "deflate"}}, 0, "records_per_second", defl);
  };
  add(64, 100, 50);
  add(1024, 90, 95);  // ahead here, but not at 8192
  add(8192, 40, 30);
  add(65536, 5, 20);
  CHECK(crossover(r) == std::size_t{65536});
  Report none;
  none.add({{"payload", "64"}, {"enc", "none"}}, 0, "records_per_second", 2);
  none.add({{"payload", "64"}, {"enc", "deflate"}}, 0, "records_per_second", 1);
  CHECK_FALSE(crossover(none).has_value());
}

TEST_CASE("write-batch and scan-window smoke runs") {
  WriteBatchConfig w;
  w.batches = {1, 500};
  w.records = 2000;
  w.reps = 3;
  auto wr = write_batch(w);
  CHECK(wr.rows.size() == 6);
  for (const auto& m : wr.rows) CHECK(m.value > 0);

  ScanWindowConfig s;
  s.minutes = {10, 120};
  s.days = 2;
  s.queries = 20;
  s.distinct_windows = 4;
  s.reps = 3;
  auto sr = scan_window(s);
  CHECK(sr.mean("rows_read", {{"minutes", "10"}}) <= 2.0);
  CHECK(sr.mean("rows_read", {{"minutes", "120"}}) >= 2.0);
  CHECK(sr.mean("rows_read", {{"minutes", "120"}}) <= 3.0);
  // Repeated windows: the cache serves rows, so fewer segment reads.
  CHECK(sr.mean("segment_rows", {{"cache", "on"}}) < sr.mean("segment_rows", {{"cache", "off"}}));
}

TEST_CASE("aggregation point: sub-saturation drains") {
  AggregationPoint p;
  p.rate = 200;
  p.max_queue = 50;
  p.seconds = 1;
  p.tags = 4;
  p.op_latency = std::chrono::microseconds(0);
  auto run = run_aggregation(p);
  CHECK(run.appended >= 150);
  CHECK(run.metrics.total.records + run.lag_samples.back() >= run.appended - 10);
  CHECK(run.lag_samples.back() < 50);
  CHECK(full_batch_seconds(p, 3) >= 0);
}
