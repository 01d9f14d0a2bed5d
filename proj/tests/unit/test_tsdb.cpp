#include <doctest.h>

#include <random>
#include <thread>

#include "rtdap/core/error.hpp"
#include "rtdap/tsdb/store.hpp"
#include "support.hpp"

using namespace rtdap;
using namespace rtdap::tsdb;

namespace {

constexpr Timestamp kHourStart = 1380027600000;  // hour-aligned
constexpr Timestamp kMin = 60'000;

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an rtdap::Error");
  return Errc::IoError;
}

StoreOptions memory_opts() { return StoreOptions{}; }

}  // namespace

TEST_CASE("register_tag assigns dense ids idempotently") {
  Store store;
  auto a = store.register_tag(parse_tag("Z::G/A"));
  CHECK(a == TagId{1});
  CHECK(store.register_tag(parse_tag("Z::G/A")) == TagId{1});

  std::mt19937_64 rng(17);
  std::map<std::string, TagId> seen{{"Z::G/A", a}};
  while (seen.size() < 1000) {
    auto t = testing::random_tag(rng);
    auto id = store.register_tag(t);
    auto [it, inserted] = seen.emplace(t.str(), id);
    if (inserted) REQUIRE(id.value == seen.size());
    REQUIRE(it->second == id);
  }
  for (const auto& [name, id] : seen) {
    REQUIRE(store.tag_name(id)->str() == name);
    REQUIRE(store.find_tag(parse_tag(name)) == id);
  }
}

TEST_CASE("put then scan returns the record") {
  Store store;
  auto id = store.register_tag(parse_tag("Z::G/A"));
  CHECK(store.scan_raw(id, 0, ~Timestamp{0} / 2).empty());
  store.put_batch(std::vector<Sample>{{id, kHourStart + 1234, 3.5, 7}});
  auto got = store.scan_raw(id, kHourStart, kHourStart + 3600000);
  REQUIRE(got.size() == 1);
  CHECK(got[0] == Sample{id, kHourStart + 1234, 3.5, 7});
}

TEST_CASE("put_batch and scan errors") {
  Store store;
  CHECK(code_of([&] { store.put_batch(std::vector<Sample>{{TagId{1}, 1, 1.0, 0}}); }) == Errc::UnregisteredTag);
  CHECK(code_of([&] { store.scan_raw(TagId{3}, 0, 10); }) == Errc::UnknownTag);
  auto id = store.register_tag(parse_tag("Z::G/A"));
  CHECK(code_of([&] { store.scan_raw(id, 10, 0); }) == Errc::BadRange);
  CHECK(code_of([&] { store.read_agg(TagId{9}, Resolution::Minute, 0, 10); }) == Errc::UnknownTag);
}

TEST_CASE("duplicate millisecond keeps the last write") {
  Store store;
  auto id = store.register_tag(parse_tag("Z::G/A"));
  store.put_batch(std::vector<Sample>{{id, kHourStart + 5, 1.0, 0}, {id, kHourStart + 5, 2.0, 9}});
  store.put_batch(std::vector<Sample>{{id, kHourStart + 6, 4.0, 0}});
  store.put_batch(std::vector<Sample>{{id, kHourStart + 6, 5.0, 0}});
  auto got = store.scan_raw(id, kHourStart, kHourStart + 10);
  REQUIRE(got.size() == 2);
  CHECK(got[0] == Sample{id, kHourStart + 5, 2.0, 9});
  CHECK(std::get<double>(got[1].value) == 5.0);
}

TEST_CASE("scan filters to the window and counts bucket rows") {
  Store store;
  auto id = store.register_tag(parse_tag("Z::G/A"));
  std::vector<Sample> batch;
  for (int m = 0; m < 60; ++m) batch.push_back({id, kHourStart + m * kMin, double(m), 0});
  store.put_batch(batch);

  ScanStats stats;
  auto got = store.scan_raw(id, kHourStart + 10 * kMin, kHourStart + 20 * kMin, &stats);
  // Counting oracle: minutes 10..19.
  CHECK(got.size() == 10);
  CHECK(std::get<double>(got.front().value) == 10.0);
  CHECK(stats.rows == 1);

  for (Timestamp w = 1; w < 60; ++w) {
    ScanStats s;
    store.scan_raw(id, kHourStart + 13, kHourStart + 13 + w * kMin - 13 - 1, &s);
    REQUIRE(s.rows == 1);
  }
  ScanStats two;
  store.scan_raw(id, kHourStart + 30 * kMin, kHourStart + 90 * kMin, &two);
  CHECK(two.rows == 2);
  ScanStats none;
  CHECK(store.scan_raw(id, kHourStart, kHourStart, &none).empty());
  CHECK(none.rows == 0);
}

TEST_CASE("scan spans many rows in time order across flushes") {
  testing::TempDir dir;
  StoreOptions opts;
  opts.dir = dir.path();
  opts.memtable_bytes = 16 * 1024;
  Store store(opts);
  auto id = store.register_tag(parse_tag("Z::G/A"));
  std::vector<Sample> all;
  for (int i = 0; i < 5000; ++i) all.push_back({id, kHourStart + Timestamp(i) * 7919, double(i), 0});
  for (std::size_t i = 0; i < all.size(); i += 250)
    store.put_batch(std::span(all).subspan(i, std::min<std::size_t>(250, all.size() - i)));
  store.flush();
  auto got = store.scan_raw(id, kHourStart, kHourStart + 5000ull * 7919);
  CHECK(got == all);
}

TEST_CASE("persistence: reopen recovers raw rows, aggregates and dictionary") {
  testing::TempDir dir;
  StoreOptions opts;
  opts.dir = dir / "not/yet/there";  // created on open
  std::vector<Sample> written;
  TagId id;
  {
    Store store(opts);
    id = store.register_tag(parse_tag("Z::G/A"));
    store.register_tag(parse_tag("Z::G/B"));
    for (int i = 0; i < 100; ++i) written.push_back({id, kHourStart + i * 1000ull, double(i), Status(i)});
    store.put_batch(std::span(written).subspan(0, 50));
    store.flush();
    store.put_batch(std::span(written).subspan(50));  // remains only in the WAL
    AggCell c{id, Resolution::Minute, kHourStart, 0.0, 49.0, 49.0, kHourStart + 49000, 50};
    store.upsert_agg(c);
  }
  Store store(opts);
  CHECK(store.find_tag(parse_tag("Z::G/B")) == TagId{2});
  CHECK(store.scan_raw(id, kHourStart, kHourStart + 3600000) == written);
  auto cell = store.get_agg(id, Resolution::Minute, kHourStart);
  REQUIRE(cell);
  CHECK(cell->count == 50);
  CHECK(cell->max == 49.0);
  // A second reopen after a recovery checkpoint still sees everything.
  store.flush();
}

TEST_CASE("read_agg range semantics and upsert") {
  Store store;
  auto id = store.register_tag(parse_tag("Z::G/A"));
  for (int m = 0; m < 5; ++m) {
    const Timestamp b = kHourStart + m * kMin;
    store.upsert_agg(AggCell{id, Resolution::Minute, b, double(m), double(m), double(m), b, 1});
  }
  CHECK(store.read_agg(id, Resolution::Minute, kHourStart, kHourStart).empty());
  auto cells = store.read_agg(id, Resolution::Minute, kHourStart + 1, kHourStart + 3 * kMin + 5);
  // [bucket_of(from), bucket_of(to)) = minutes 0, 1, 2
  REQUIRE(cells.size() == 3);
  CHECK(cells[2].bucket == kHourStart + 2 * kMin);

  AggCell again = cells[1];
  store.upsert_agg(again);
  store.upsert_agg(again);
  CHECK(store.get_agg(id, Resolution::Minute, again.bucket) == again);

  AggCell bad = again;
  bad.bucket += 1;
  CHECK(code_of([&] { store.upsert_agg(bad); }) == Errc::InvalidConfig);
}

TEST_CASE("concurrent upserts to distinct buckets are all visible") {
  Store store;
  auto id = store.register_tag(parse_tag("Z::G/A"));
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 500; ++i) {
        const Timestamp b = kHourStart + Timestamp(t * 500 + i) * kMin;
        store.upsert_agg(AggCell{id, Resolution::Minute, b, 1.0, 2.0, 1.5, b, 2});
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(store.read_agg(id, Resolution::Minute, kHourStart, kHourStart + 2000 * kMin).size() == 2000);
}

TEST_CASE("rebuild_aggregates equals the brute-force fold") {
  Store store;
  auto a = store.register_tag(parse_tag("Z::G/A"));
  auto b = store.register_tag(parse_tag("Z::G/B"));
  auto s = store.register_tag(parse_tag("Z::G/S"));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> val(-50, 50);
  std::vector<Sample> samples;
  Timestamp t = kHourStart - 2 * 3600000 + 17;
  for (int i = 0; i < 4000; ++i) {
    t += 1 + rng() % 9000;
    samples.push_back({i % 2 ? a : b, t, val(rng), 0});
    if (i % 10 == 0) samples.push_back({s, t, std::string("txt"), 0});
  }
  store.put_batch(samples);
  CHECK(store.rebuild_aggregates(TagId{1}, TagId{3}, t, t) == 0);
  const auto written = store.rebuild_aggregates(TagId{1}, TagId{3}, kHourStart - 3 * 3600000, t + 1);

  auto oracle = testing::fold_oracle(samples);
  CHECK(written == oracle.size());
  for (const auto& [key, expected] : oracle) {
    auto got = store.get_agg(TagId{std::get<0>(key)}, std::get<1>(key), std::get<2>(key));
    REQUIRE(got);
    REQUIRE(*got == expected);
  }
  CHECK(store.read_agg(s, Resolution::Day, 0, t + 86400000).empty());

  std::vector<AggCell> before = store.read_agg(a, Resolution::Minute, 0, t + 1);
  store.rebuild_aggregates(TagId{1}, TagId{3}, kHourStart - 3 * 3600000, t + 1);
  CHECK(store.read_agg(a, Resolution::Minute, 0, t + 1) == before);
}

TEST_CASE("row cache: hits skip segment reads and results are identical") {
  Store store;
  auto id = store.register_tag(parse_tag("Z::G/A"));
  std::vector<Sample> batch;
  for (int i = 0; i < 3 * 3600; ++i) batch.push_back({id, kHourStart + i * 1000ull, double(i), 0});
  store.put_batch(batch);
  store.flush();

  ScanStats off1, off2;
  auto r1 = store.scan_raw(id, kHourStart, kHourStart + 3 * 3600000, &off1);
  auto r2 = store.scan_raw(id, kHourStart, kHourStart + 3 * 3600000, &off2);
  CHECK(off1.segment_rows == off2.segment_rows);
  CHECK(off1.segment_rows == 3);

  store.configure_cache(16);
  ScanStats on1, on2;
  auto c1 = store.scan_raw(id, kHourStart, kHourStart + 3 * 3600000, &on1);
  auto c2 = store.scan_raw(id, kHourStart, kHourStart + 3 * 3600000, &on2);
  CHECK(on2.segment_rows == 0);
  CHECK(on2.cache_hits == 3);
  CHECK(c1 == r1);
  CHECK(c2 == r1);

  // Writes invalidate cached rows.
  store.put_batch(std::vector<Sample>{{id, kHourStart + 500, -1.0, 0}});
  auto c3 = store.scan_raw(id, kHourStart, kHourStart + 1000);
  REQUIRE(c3.size() == 2);
  CHECK(std::get<double>(c3[1].value) == -1.0);
  CHECK(store.cache_stats().hits >= 3);

  // LRU eviction at capacity.
  store.configure_cache(1);
  store.scan_raw(id, kHourStart, kHourStart + 3 * 3600000);
  CHECK(store.cache_stats().size == 1);
}

TEST_CASE("shard routing by tag-id range") {
  StoreOptions opts;
  opts.shards = 4;
  opts.tags_per_shard = 10;
  Store store(opts);
  CHECK(store.shard_of(TagId{1}) == 0);
  CHECK(store.shard_of(TagId{10}) == 0);
  CHECK(store.shard_of(TagId{11}) == 1);
  CHECK(store.shard_of(TagId{35}) == 3);
  CHECK(store.shard_of(TagId{1000}) == 3);

  std::vector<TagId> ids;
  for (int i = 0; i < 40; ++i) ids.push_back(store.register_tag(parse_tag("Z::G/T" + std::to_string(i))));
  std::vector<Sample> batch;
  for (int i = 0; i < 4000; ++i) batch.push_back({ids[i % 40], kHourStart + i * 10ull, double(i), 0});
  store.put_batch(batch);
  for (auto id : ids) {
    auto got = store.scan_raw(id, kHourStart, kHourStart + 40000);
    REQUIRE(got.size() == 100);
    for (std::size_t i = 1; i < got.size(); ++i) REQUIRE(got[i - 1].time < got[i].time);
  }
}

TEST_CASE("compaction keeps contents") {
  testing::TempDir dir;
  StoreOptions opts;
  opts.dir = dir.path();
  opts.max_segments = 100;
  Store store(opts);
  auto id = store.register_tag(parse_tag("Z::G/A"));
  std::vector<Sample> all;
  for (int round = 0; round < 5; ++round) {
    std::vector<Sample> batch;
    for (int i = 0; i < 100; ++i) batch.push_back({id, kHourStart + Timestamp(round * 100 + i) * 500, double(round), 0});
    store.put_batch(batch);
    store.flush();
    all.insert(all.end(), batch.begin(), batch.end());
  }
  auto before = store.scan_raw(id, kHourStart, kHourStart + 1000 * 500);
  store.compact();
  CHECK(store.scan_raw(id, kHourStart, kHourStart + 1000 * 500) == before);
  CHECK(before == all);
  Store reopened([&] {
    auto o = opts;
    return o;
  }());
}

TEST_CASE("concurrent readers see whole rows while writing") {
  Store store;
  auto id = store.register_tag(parse_tag("Z::G/A"));
  std::atomic<bool> done{false};
  std::thread writer([&] {
    for (int i = 0; i < 2000; ++i) store.put_batch(std::vector<Sample>{{id, kHourStart + Timestamp(i), double(i), 0}});
    done = true;
  });
  std::size_t last = 0;
  while (!done) {
    auto got = store.scan_raw(id, kHourStart, kHourStart + 3600000);
    REQUIRE(got.size() >= last);
    for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(got[i].time == kHourStart + i);
    last = got.size();
  }
  writer.join();
  CHECK(store.scan_raw(id, kHourStart, kHourStart + 3600000).size() == 2000);
}
