#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <thread>

#include "rtdap/agg/adaptive_queue.hpp"
#include "rtdap/agg/bolt.hpp"
#include "rtdap/agg/topology.hpp"
#include "rtdap/agg/update_cell.hpp"
#include "rtdap/core/error.hpp"
#include "support.hpp"

using namespace rtdap;
using namespace rtdap::agg;
using tsdb::AggCell;

namespace {

constexpr Timestamp kMinuteStart = 1380028320000;  // minute-aligned

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an rtdap::Error");
  return Errc::IoError;
}

void check_against_oracle(tsdb::Store& store, const std::vector<Sample>& samples) {
  auto oracle = testing::fold_oracle(samples);
  for (const auto& [key, expected] : oracle) {
    auto got = store.get_agg(TagId{std::get<0>(key)}, std::get<1>(key), std::get<2>(key));
    REQUIRE(got);
    REQUIRE(*got == expected);
  }
}

std::vector<Sample> random_samples(tsdb::Store& store, int tags, int n, std::uint64_t seed) {
  std::vector<TagId> ids;
  for (int i = 0; i < tags; ++i) ids.push_back(store.register_tag(parse_tag("Plant::Unit/T" + std::to_string(i))));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v(-100, 100);
  std::vector<Sample> out;
  Timestamp t = kMinuteStart;
  for (int i = 0; i < n; ++i) {
    t += rng() % 3000;
    const auto tag = ids[rng() % ids.size()];
    if (rng() % 20 == 0)
      out.push_back({tag, t, std::int64_t(i), 0});
    else
      out.push_back({tag, t, v(rng), Status(rng() % 4)});
  }
  return out;
}

}  // namespace

TEST_CASE("update_cell examples") {
  const Sample first{TagId{1}, kMinuteStart + 10, 2.5, 0};
  auto c = update_cell(std::nullopt, first, Resolution::Minute);
  CHECK(c.min == 2.5);
  CHECK(c.max == 2.5);
  CHECK(c.close == 2.5);
  CHECK(c.close_time == first.time);
  CHECK(c.count == 1);
  CHECK(c.bucket == kMinuteStart);

  AggCell cell{TagId{1}, Resolution::Minute, kMinuteStart, 1.0, 3.0, 2.0, kMinuteStart + 100, 3};
  auto later = update_cell(cell, {TagId{1}, kMinuteStart + 200, 0.5, 0}, Resolution::Minute);
  CHECK(later.min == 0.5);
  CHECK(later.max == 3.0);
  CHECK(later.close == 0.5);
  CHECK(later.count == 4);

  auto older = update_cell(cell, {TagId{1}, kMinuteStart + 50, 9.0, 0}, Resolution::Minute);
  CHECK(older.max == 9.0);
  CHECK(older.close == 2.0);
  CHECK(older.close_time == kMinuteStart + 100);

  auto tie = update_cell(cell, {TagId{1}, kMinuteStart + 100, 7.0, 0}, Resolution::Minute);
  CHECK(tie.close == 7.0);

  CHECK(code_of([&] { update_cell(cell, {TagId{1}, kMinuteStart + 60000, 1.0, 0}, Resolution::Minute); }) ==
        Errc::WrongBucket);
  CHECK(code_of([&] { update_cell(std::nullopt, {TagId{1}, kMinuteStart, std::int64_t(1), 0}, Resolution::Minute); }) ==
        Errc::WrongValueKind);
}

TEST_CASE("update_cell fold is order-insensitive except for close") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> v(-10, 10);
  for (int round = 0; round < 200; ++round) {
    std::vector<Sample> samples;
    for (int i = 0; i < 30; ++i) samples.push_back({TagId{1}, kMinuteStart + Timestamp(i) * 1000 + rng() % 1000, v(rng), 0});
    auto sorted = samples;
    std::sort(sorted.begin(), sorted.end(), [](const Sample& a, const Sample& b) { return a.time < b.time; });
    std::shuffle(samples.begin(), samples.end(), rng);
    for (auto r : kAllResolutions) {
      std::optional<AggCell> a, b;
      for (const auto& s : samples) a = update_cell(a, s, r);
      for (const auto& s : sorted) b = update_cell(b, s, r);
      REQUIRE(*a == *b);
    }
  }
}

TEST_CASE("adaptive queue: cap is honoured under random interleavings") {
  CHECK(code_of([] { AdaptiveQueue<int> q(0); }) == Errc::InvalidConfig);
  CHECK(code_of([] { AdaptiveQueue<int> q(100'001); }) == Errc::InvalidConfig);

  {
    AdaptiveQueue<int> q(20);
    std::vector<int> avail(50);
    std::iota(avail.begin(), avail.end(), 0);
    CHECK(spout_fill<int>(q, avail) == 20);
    CHECK(q.size() == 20);
    CHECK(spout_fill<int>(q, std::span<const int>{}) == 0);
    auto got = q.drain_now();
    CHECK(got == std::vector<int>(avail.begin(), avail.begin() + 20));
  }

  std::mt19937_64 rng(7);
  AdaptiveQueue<int> q(37);
  int next_in = 0, next_out = 0;
  for (int step = 0; step < 100'000; ++step) {
    if (rng() % 2) {
      std::vector<int> batch(rng() % 60);
      for (auto& x : batch) x = next_in + int(&x - batch.data());
      next_in += int(q.push(batch));
    } else {
      for (int x : q.drain_now()) REQUIRE(x == next_out++);
    }
    REQUIRE(q.size() <= q.capacity());
  }
  for (int x : q.drain_now()) REQUIRE(x == next_out++);
  CHECK(next_out == next_in);
  CHECK(q.average_length() <= 37.0);
}

TEST_CASE("adaptive queue: concurrent filler and drainer keep order and cap") {
  AdaptiveQueue<int> q(16);
  constexpr int kTotal = 50'000;
  std::atomic<bool> over_cap{false};
  std::thread filler([&] {
    int next = 0;
    while (next < kTotal) {
      std::vector<int> batch;
      for (int i = next; i < std::min(kTotal, next + 40); ++i) batch.push_back(i);
      const auto n = q.push(batch);
      if (q.size() > 16) over_cap = true;
      next += int(n);
      if (n == 0) q.wait_for_space(std::chrono::milliseconds(5));
    }
  });
  int expected = 0;
  while (expected < kTotal) {
    auto got = q.drain(std::chrono::milliseconds(50));
    REQUIRE(got.size() <= 16);
    for (int x : got) REQUIRE(x == expected++);
  }
  filler.join();
  CHECK_FALSE(over_cap);
}

TEST_CASE("op accounting: one record is 3 reads and 4 writes") {
  tsdb::Store store;
  auto id = store.register_tag(parse_tag("Plant::Unit/A"));
  AggregationWriter writer(store);
  auto ops = writer.write(std::vector<Sample>{{id, kMinuteStart + 5, 1.0, 0}});
  CHECK(ops.logical_reads == 3);
  CHECK(ops.logical_writes == 4);
  CHECK(ops.physical_reads == 3);
  CHECK(ops.physical_writes == 4);

  auto lone = writer.write(std::vector<Sample>{{id, kMinuteStart + 6, std::string("x"), 0}});
  CHECK(lone.logical_reads == 0);
  CHECK(lone.logical_writes == 1);
  CHECK(lone.physical_writes == 1);
}

TEST_CASE("op accounting: 60 records in one minute and per-record decline") {
  std::vector<double> per_record;
  for (std::size_t n = 1; n <= 60; ++n) {
    tsdb::Store store;
    auto id = store.register_tag(parse_tag("Plant::Unit/A"));
    std::vector<Sample> batch;
    for (std::size_t i = 0; i < n; ++i) batch.push_back({id, kMinuteStart + i * 1000, double(i), 0});
    auto ops = AggregationWriter(store).write(batch);
    CHECK(ops.logical_reads == 3 * n);
    CHECK(ops.logical_writes == 4 * n);
    CHECK(ops.physical_reads == 3);
    CHECK(ops.physical_writes == 4);
    per_record.push_back(double(ops.physical_reads + ops.physical_writes) / double(n));
  }
  for (std::size_t i = 1; i < per_record.size(); ++i) REQUIRE(per_record[i] < per_record[i - 1]);
}

TEST_CASE("fold associativity: two batches equal one") {
  tsdb::Store one, two;
  auto samples = random_samples(one, 5, 3000, 11);
  random_samples(two, 5, 0, 11);
  AggregationWriter(one).write(samples);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    tsdb::Store split;
    random_samples(split, 5, 0, 11);
    const std::size_t cut = rng() % samples.size();
    AggregationWriter w(split);
    w.write(std::span(samples).subspan(0, cut));
    w.write(std::span(samples).subspan(cut));
    for (std::uint32_t t = 1; t <= 5; ++t)
      for (auto r : kAllResolutions)
        REQUIRE(split.read_agg(TagId{t}, r, 0, ~Timestamp{0} / 2) == one.read_agg(TagId{t}, r, 0, ~Timestamp{0} / 2));
  }
  check_against_oracle(one, samples);
}

TEST_CASE("redelivered batch leaves aggregates unchanged") {
  tsdb::Store store;
  auto samples = random_samples(store, 3, 500, 5);
  std::vector<std::uint64_t> offsets(samples.size());
  std::iota(offsets.begin(), offsets.end(), 0);
  AggregationWriter w(store);
  w.write(std::span(samples).subspan(0, 300), std::span(offsets).subspan(0, 300));
  // Crash before commit: the consumer restarts from 200 with a different batching.
  w.write(std::span(samples).subspan(200, 250), std::span(offsets).subspan(200, 250));
  w.write(std::span(samples).subspan(450), std::span(offsets).subspan(450));
  check_against_oracle(store, samples);
}

TEST_CASE("bolt commits after writing") {
  tsdb::Store store;
  log::MessageLog log({.partitions = 1});
  log.register_group("g");
  auto samples = random_samples(store, 2, 100, 1);
  log.append_batch(samples);
  Bolt bolt(store, log, "g", 0, [&](std::uint32_t, std::uint64_t) { CHECK(log.committed("g", 0) == 0); });
  auto batch = log.poll("g", 0, 1000);
  bolt.process(batch);
  CHECK(log.committed("g", 0) == 100);
  CHECK(bolt.metrics().batches == 1);
  CHECK(bolt.metrics().records == 100);
  const auto& m = bolt.metrics();
  CHECK(m.scan + m.write + m.compute <= m.total_exec);
  check_against_oracle(store, samples);
}

TEST_CASE("topology end to end") {
  for (std::size_t max_queue : {std::size_t{1}, std::size_t{200}}) {
    CAPTURE(max_queue);
    tsdb::Store store;
    log::MessageLog log({.partitions = 4});
    auto samples = random_samples(store, 20, 1000, 21);
    Topology topo(log, store, {.max_queue = max_queue});
    topo.start();
    log.append_batch(samples);
    REQUIRE(topo.wait_drained(std::chrono::seconds(60)));
    auto m = topo.metrics();
    topo.stop();
    CHECK(m.total.records == samples.size());
    CHECK(m.per_partition.size() == 4);
    if (max_queue == 1) CHECK(m.total.batches == samples.size());
    CHECK(m.total.avg_queue_size <= double(max_queue));
    check_against_oracle(store, samples);
    for (std::uint32_t t = 1; t <= 20; ++t) {
      std::size_t expected = std::count_if(samples.begin(), samples.end(), [&](const Sample& s) { return s.tag.value == t; });
      std::vector<Sample> mine;
      for (const auto& s : samples)
        if (s.tag.value == t) mine.push_back(s);
      auto got = store.scan_raw(TagId{t}, 0, ~Timestamp{0} / 2);
      // raw table is last-write-wins per millisecond
      std::map<Timestamp, Sample> lww;
      for (const auto& s : mine) lww[s.time] = s;
      REQUIRE(got.size() == lww.size());
      CHECK(expected >= got.size());
    }
  }
}

TEST_CASE("topology: failure before commit, restart, no lost or doubled aggregates") {
  tsdb::Store store;
  log::MessageLog log({.partitions = 2});
  auto samples = random_samples(store, 6, 2000, 77);
  log.append_batch(samples);
  {
    TopologyOptions o;
    o.max_queue = 50;
    o.before_commit = [](std::uint32_t p, std::uint64_t batch) {
      if (p == 1 && batch == 3) throw std::runtime_error("injected crash");
    };
    Topology topo(log, store, o);
    topo.start();
    CHECK_FALSE(topo.wait_drained(std::chrono::seconds(30)));
    CHECK(topo.error() != nullptr);
    CHECK(topo.metrics().error == "injected crash");
    topo.stop();
  }
  CHECK(log.total_lag("aggregation") > 0);
  Topology again(log, store, {.max_queue = 50});
  again.start();
  REQUIRE(again.wait_drained(std::chrono::seconds(60)));
  again.stop();
  check_against_oracle(store, samples);
}

TEST_CASE("topology surfaces store errors") {
  tsdb::Store store;
  log::MessageLog log({.partitions = 1});
  log.append(TagId{42}, kMinuteStart, 1.0, 0);  // never registered
  Topology topo(log, store, {});
  topo.start();
  CHECK_FALSE(topo.wait_drained(std::chrono::milliseconds(500)));
  REQUIRE(topo.error());
  CHECK(log.lag("aggregation", 0) == 1);
}
