#include <doctest.h>

#include <fstream>
#include <random>
#include <thread>

#include "rtdap/core/error.hpp"
#include "rtdap/log/message_log.hpp"
#include "support.hpp"

using namespace rtdap;
using namespace rtdap::log;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an rtdap::Error");
  return Errc::IoError;
}

Sample sample(std::uint32_t tag, Timestamp t, double v = 1.0) { return Sample{TagId{tag}, t, v, 0}; }

}  // namespace

TEST_CASE("create_log validates partition count") {
  MessageLog log({4, Durability::Memory});
  CHECK(log.partition_count() == 4);
  for (std::uint32_t p = 0; p < 4; ++p) CHECK(log.head(p) == 0);
  CHECK(code_of([] { MessageLog({0, Durability::Memory}); }) == Errc::InvalidConfig);
  CHECK(code_of([] { MessageLog({257, Durability::Memory}); }) == Errc::InvalidConfig);
}

TEST_CASE("append routes by tag id modulo partitions") {
  MessageLog log({4, Durability::Memory});
  auto a = log.append(TagId{5}, 100, 1.0, 0);
  CHECK(a.partition == 1);
  auto b = log.append(TagId{5}, 101, 2.0, 0);
  CHECK(b.partition == 1);
  CHECK(b.offset == a.offset + 1);
}

TEST_CASE("per-partition offsets are dense under many appends") {
  MessageLog log({4, Durability::Memory});
  std::vector<std::uint64_t> expected(4, 0);
  for (int i = 0; i < 100000; ++i) {
    const std::uint32_t tag = 1 + i % 8;
    auto r = log.append(sample(tag, 1000 + i));
    REQUIRE(r.partition == tag % 4);
    REQUIRE(r.offset == expected[r.partition]++);
  }
  for (std::uint32_t p = 0; p < 4; ++p) {
    auto recs = log.read(p, 0, 1u << 20);
    REQUIRE(recs.size() == expected[p]);
    for (std::size_t i = 0; i < recs.size(); ++i) REQUIRE(recs[i].offset == i);
  }
}

TEST_CASE("poll does not advance; commit does") {
  MessageLog log({2, Durability::Memory});
  log.register_group("g");
  CHECK(log.lag("g", 0) == 0);
  CHECK(code_of([&] { log.poll("nope", 0, 1); }) == Errc::UnknownGroup);
  CHECK(code_of([&] { log.lag("nope", 0); }) == Errc::UnknownGroup);

  for (int i = 0; i < 10; ++i) log.append(sample(2, 100 + i, i));
  auto first = log.poll("g", 0, 10);
  REQUIRE(first.size() == 10);
  CHECK(std::get<double>(first.front().sample.value) == 0.0);
  CHECK(log.poll("g", 0, 10) == first);
  CHECK(log.poll("g", 0, 0).empty());

  log.commit("g", 0, 10);
  CHECK(log.poll("g", 0, 10).empty());
  CHECK(code_of([&] { log.commit("g", 0, 11); }) == Errc::OffsetBeyondHead);
}

TEST_CASE("commit is monotone and lag is head minus committed") {
  MessageLog log({1, Durability::Memory});
  log.register_group("g");
  for (int i = 0; i < 100; ++i) log.append(sample(1, 1 + i));
  log.commit("g", 0, 5);
  log.commit("g", 0, 3);
  CHECK(log.committed("g", 0) == 5);
  log.commit("g", 0, 40);
  CHECK(log.lag("g", 0) == 60);
  CHECK(log.total_lag("g") == 60);
}

TEST_CASE("file durability recovers records and commits") {
  testing::TempDir dir;
  {
    MessageLog log({3, Durability::File, dir.path()});
    log.register_group("agg");
    for (int i = 0; i < 300; ++i) log.append(Sample{TagId{1u + i % 5}, 1000u + i, std::int64_t{i}, Status(i % 256)});
    log.append(Sample{TagId{7}, 5, std::string("hello"), 1});
    log.commit("agg", 1, 20);
  }
  MessageLog log({3, Durability::File, dir.path()});
  CHECK(log.total_records() == 301);
  CHECK(log.committed("agg", 1) == 20);
  auto recs = log.read(1, 0, 1000);
  for (std::size_t i = 0; i < recs.size(); ++i) CHECK(recs[i].offset == i);
  auto p = log.read(log.partition_of(TagId{7}), 0, 1000);
  CHECK(std::get<std::string>(p.back().sample.value) == "hello");
}

TEST_CASE("torn tail is truncated on recovery") {
  testing::TempDir dir;
  {
    MessageLog log({1, Durability::File, dir.path()});
    for (int i = 0; i < 10; ++i) log.append(sample(1, 1 + i));
  }
  {
    std::ofstream f(dir / "partition-0.log", std::ios::binary | std::ios::app);
    f.write("\x00\x00\x00\x30garbage", 11);
  }
  {
    MessageLog log({1, Durability::File, dir.path()});
    CHECK(log.head(0) == 10);
    log.append(sample(1, 99));
  }
  MessageLog log({1, Durability::File, dir.path()});
  CHECK(log.head(0) == 11);
  CHECK(log.read(0, 10, 1)[0].sample.time == 99);
}

TEST_CASE("concurrent producers keep partitions dense") {
  MessageLog log({4, Durability::Memory});
  std::vector<std::thread> producers;
  for (int t = 0; t < 4; ++t) {
    producers.emplace_back([&, t] {
      for (int i = 0; i < 5000; ++i) log.append(sample(1 + (t * 7 + i) % 13, 1 + i));
    });
  }
  for (auto& p : producers) p.join();
  CHECK(log.total_records() == 20000);
  for (std::uint32_t p = 0; p < 4; ++p) {
    auto recs = log.read(p, 0, 1u << 20);
    for (std::size_t i = 0; i < recs.size(); ++i) REQUIRE(recs[i].offset == i);
    for (const auto& r : recs) REQUIRE(log.partition_of(r.sample.tag) == p);
  }
}

TEST_CASE("wait_for wakes on append") {
  MessageLog log({1, Durability::Memory});
  CHECK_FALSE(log.wait_for(0, 0, std::chrono::milliseconds(10)));
  std::thread producer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    log.append(sample(1, 1));
  });
  CHECK(log.wait_for(0, 0, std::chrono::milliseconds(2000)));
  producer.join();
}
