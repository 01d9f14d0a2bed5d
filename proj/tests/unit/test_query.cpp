#include <doctest.h>
#include <httplib.h>

#include <json.hpp>
#include <random>

#include "rtdap/agg/topology.hpp"
#include "rtdap/core/error.hpp"
#include "rtdap/ingest/server.hpp"
#include "rtdap/log/message_log.hpp"
#include "rtdap/query/api.hpp"
#include "rtdap/query/csv.hpp"
#include "rtdap/sim/ingest_client.hpp"
#include "rtdap/tsdb/store.hpp"

using namespace rtdap;
using namespace rtdap::query;
using nlohmann::json;

namespace {

constexpr Timestamp kT0 = 1380027600000;

json body(const Response& r) { return json::parse(r.body); }

std::string header(const Response& r, const std::string& name) {
  for (const auto& [k, v] : r.headers)
    if (k == name) return v;
  return {};
}

}  // namespace

TEST_CASE("csv reader follows RFC 4180") {
  CsvReader r("a,\"b,1\",\"say \"\"hi\"\"\"\r\n\"multi\nline\",,x\nlast");
  auto one = r.next();
  REQUIRE(one);
  REQUIRE(one->size() == 3);
  CHECK((*one)[1].text == "b,1");
  CHECK((*one)[1].quoted);
  CHECK((*one)[2].text == "say \"hi\"");
  CHECK(r.line() == 1);
  auto two = r.next();
  REQUIRE(two);
  CHECK((*two)[0].text == "multi\nline");
  CHECK((*two)[1].text.empty());
  CHECK(r.line() == 2);
  auto three = r.next();
  REQUIRE(three);
  CHECK(three->front().text == "last");
  CHECK(r.line() == 4);
  CHECK_FALSE(r.next());

  CsvReader bad("\"open");
  CHECK_THROWS_AS(bad.next(), Error);
  CsvReader trailing("\"a\"b,c");
  CHECK_THROWS_AS(trailing.next(), Error);
}

TEST_CASE("csv values keep their kind") {
  CHECK(parse_csv_value({"1.5", false}) == Value{1.5});
  CHECK(parse_csv_value({"7", false}) == Value{std::int64_t{7}});
  CHECK(parse_csv_value({"true", false}) == Value{true});
  CHECK(parse_csv_value({"7", true}) == Value{std::string("7")});
  CHECK_THROWS_AS(parse_csv_value({"abc", false}), Error);
  CHECK_THROWS_AS(parse_csv_value({"", false}), Error);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double d = std::bit_cast<double>(rng());
    if (!std::isfinite(d)) continue;
    auto text = format_csv_value(d);
    REQUIRE(parse_csv_value({text, false}) == Value{d});
  }
  CHECK(format_csv_value(3.0) == "3.0");
  CHECK(format_csv_value(std::string("a\"b")) == "\"a\"\"b\"");
}

TEST_CASE("GET /tags: prefix, order and pagination") {
  tsdb::Store store;
  QueryApi api(store);
  CHECK(body(api.tags({})) == json::array());
  std::vector<std::string> names;
  for (int i = 0; i < 1000; ++i) {
    names.push_back((i % 2 ? "Z::G/T" : "A::G/T") + std::to_string(i));
    store.register_tag(parse_tag(names.back()));
  }
  std::sort(names.begin(), names.end());

  auto z = body(api.tags({{"prefix", "Z::"}, {"limit", "10000"}}));
  CHECK(z.size() == 500);
  for (const auto& e : z) CHECK(e["name"].get<std::string>().rfind("Z::", 0) == 0);

  std::vector<std::string> paged;
  std::string cursor;
  int pages = 0;
  while (true) {
    Params p{{"limit", "64"}};
    if (!cursor.empty()) p["cursor"] = cursor;
    auto r = api.tags(p);
    for (const auto& e : body(r)) paged.push_back(e["name"]);
    ++pages;
    cursor = header(r, "X-Next-Cursor");
    if (cursor.empty()) break;
  }
  CHECK(paged == names);
  CHECK(pages == 16);
  CHECK(api.tags({{"limit", "0"}}).status == 400);
  CHECK(api.tags({{"limit", "x"}}).status == 400);
}

TEST_CASE("GET /series: raw, aggregates and errors") {
  tsdb::Store store;
  log::MessageLog log({.partitions = 2});
  QueryApi api(store, {.log = &log});
  const auto id = store.register_tag(parse_tag("Z::G/A"));
  // 60 raw points spread over 12 minutes, 5 per minute.
  std::vector<Sample> batch;
  for (int i = 0; i < 60; ++i) batch.push_back({id, kT0 + i * 12000ull, double(i), Status(i % 3)});
  log.append_batch(batch);
  {
    agg::Topology topo(log, store, {});
    topo.start();
    REQUIRE(topo.wait_drained(std::chrono::seconds(30)));
  }

  auto raw = api.series({{"tag", "Z::G/A"}, {"from", std::to_string(kT0)}, {"to", std::to_string(kT0 + 3600000)}});
  REQUIRE(raw.status == 200);
  auto j = body(raw);
  CHECK(j["resolution"] == "raw");
  REQUIRE(j["points"].size() == 60);
  CHECK(j["points"][5]["t"] == kT0 + 60000);
  CHECK(j["points"][5]["v"] == 5.0);
  CHECK(j["points"][5]["status"] == 2);

  auto mins = body(api.series({{"tag", "Z::G/A"}, {"res", "min"}, {"from", std::to_string(kT0)},
                                {"to", std::to_string(kT0 + 3600000)}}));
  REQUIRE(mins["points"].size() == 12);
  for (std::size_t m = 0; m < 12; ++m) {
    const auto& c = mins["points"][m];
    CHECK(c["t"] == kT0 + m * 60000);
    CHECK(c["min"] == double(5 * m));
    CHECK(c["max"] == double(5 * m + 4));
    CHECK(c["close"] == double(5 * m + 4));
    CHECK(c["count"] == 5);
  }
  auto hours = body(api.series({{"tag", "Z::G/A"}, {"res", "hour"}, {"from", "0"}, {"to", std::to_string(kT0 + 86400000)}}));
  CHECK(hours["points"].size() <= 24);
  CHECK(hours["points"].size() == 1);

  CHECK(body(api.series({{"tag", "Z::G/A"}, {"from", "5"}, {"to", "5"}}))["points"].empty());
  CHECK(api.series({{"tag", "Z::G/Nope"}}).status == 404);
  CHECK(api.series({{"tag", "Z::G/A"}, {"from", "9"}, {"to", "1"}}).status == 400);
  CHECK(api.series({{"tag", "Z::G/A"}, {"res", "week"}}).status == 400);
  CHECK(body(api.series({{"tag", "Z::G/A"}, {"res", "week"}}))["code"] == "BadResolution");
  CHECK(api.series({{"tag", "Z::G/A"}, {"from", "abc"}}).status == 400);
  CHECK(api.series({}).status == 400);

  // Thin adapter: identical to the store call.
  auto direct = store.read_agg(id, Resolution::Day, 0, kT0 + 86400000);
  auto day = body(api.series({{"tag", "Z::G/A"}, {"res", "day"}, {"to", std::to_string(kT0 + 86400000)}}));
  REQUIRE(day["points"].size() == direct.size());
  CHECK(day["points"][0]["count"] == direct[0].count);
}

TEST_CASE("upload and download round trip") {
  tsdb::Store store;
  QueryApi api(store);
  CHECK(body(api.upload(""))["imported"] == 0);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> v(-1e6, 1e6);
  std::string csv = "tag,utcMillis,value,status\r\n";
  std::vector<std::pair<Timestamp, double>> rows;
  for (int i = 0; i < 1000; ++i) {
    rows.emplace_back(kT0 + i * 997ull, v(rng));
    csv += "\"Plant::Unit,1/FI\"," + std::to_string(rows.back().first) + "," + format_csv_value(rows.back().second) +
           "," + std::to_string(i % 4) + "\r\n";
  }
  auto up = api.upload(csv);
  REQUIRE(up.status == 200);
  CHECK(body(up)["imported"] == 1000);

  const auto id = *store.find_tag(parse_tag("Plant::Unit,1/FI"));
  auto got = store.scan_raw(id, 0, ~Timestamp{0} / 2);
  REQUIRE(got.size() == 1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    REQUIRE(got[i].time == rows[i].first);
    REQUIRE(std::get<double>(got[i].value) == rows[i].second);
  }
  // Aggregates were written through the runtime path.
  CHECK(!store.read_agg(id, Resolution::Minute, 0, ~Timestamp{0} / 2).empty());

  auto down = api.download({{"tag", "Plant::Unit,1/FI"}});
  REQUIRE(down.status == 200);
  CHECK(down.content_type == "text/csv");
  CHECK(down.body == csv);

  // Re-uploading the download into a fresh store reproduces it.
  tsdb::Store other;
  QueryApi api2(other);
  CHECK(body(api2.upload(down.body))["imported"] == 1000);
  CHECK(api2.download({{"tag", "Plant::Unit,1/FI"}}).body == down.body);
}

TEST_CASE("upload reports the first malformed row") {
  tsdb::Store store;
  QueryApi api(store);
  std::string csv = "tag,utcMillis,value,status\n";
  for (int i = 1; i <= 4; ++i) csv += "Z::A," + std::to_string(kT0 + i) + ",1.5,0\n";
  csv += "Z::A,notatime,1.5,0\n";
  csv += "Z::A,99,1.5,0\n";
  auto r = api.upload(csv);
  CHECK(r.status == 400);
  auto j = body(r);
  CHECK(j["row"] == 5);
  CHECK(j["line"] == 6);
  CHECK(j["imported"] == 4);
  CHECK(store.scan_raw(*store.find_tag(parse_tag("Z::A")), 0, kT0 + 100).size() == 4);

  CHECK(api.upload("time,value\n1,2\n").status == 400);
  CHECK(body(api.upload("tag,utcMillis,value,status\nbad tag,1,1.0,0\n"))["code"] == "MalformedTag");
  CHECK(body(api.upload("tag,utcMillis,value,status\nZ::A,1,1.0,300\n"))["row"] == 1);
  CHECK(api.download({{"tag", "Z::Missing"}}).status == 404);
}

TEST_CASE("GET /stats is consistent with the log") {
  tsdb::Store store;
  log::MessageLog log({.partitions = 2});
  QueryApi api(store, {.log = &log});
  auto s = body(api.stats());
  CHECK(s["ingest"]["totalAccepted"] == 0);
  CHECK(s["topology"]["records"] == 0);
  CHECK(s["log"]["lag"] == 0);
  const auto id = store.register_tag(parse_tag("Z::A"));
  log.register_group("aggregation");
  for (int i = 0; i < 10; ++i) log.append(id, kT0 + i, 1.0, 0);
  s = body(api.stats());
  CHECK(s["log"]["lag"] == log.total_lag("aggregation"));
  CHECK(s["log"]["records"] == 10);
}

TEST_CASE("HTTP server end to end with live ingest") {
  tsdb::Store store;
  log::MessageLog log({.partitions = 2});
  ingest::IngestOptions io;
  io.bind = {"127.0.0.1", 0};
  io.workers = 1;
  ingest::IngestServer ingest(io, store, log);
  agg::Topology topo(log, store, {});
  QueryApi api(store, {.log = &log, .ingest = &ingest, .topology = &topo});
  HttpServer http(api, {"127.0.0.1", 0});
  ingest.start();
  topo.start();
  http.start();

  auto client = sim::IngestClient::connect({"127.0.0.1", ingest.port()});
  client.send(wire::StreamDefinition{1, "Live::A", ValueKind::Float});
  for (int i = 0; i < 300; ++i) client.send(wire::DataRecord{1, kT0 + i * 1000ull, double(i), 0});
  client.finish();

  httplib::Client c("127.0.0.1", http.port());
  std::uint64_t last_accepted = 0;
  for (int attempt = 0; attempt < 200; ++attempt) {
    auto res = c.Get("/stats");
    REQUIRE(res);
    auto s = json::parse(res->body);
    const auto acc = s["ingest"]["totalAccepted"].get<std::uint64_t>();
    REQUIRE(acc >= last_accepted);
    last_accepted = acc;
    if (acc == 300 && s["log"]["lag"] == 0) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  CHECK(last_accepted == 300);
  REQUIRE(topo.wait_drained(std::chrono::seconds(10)));

  auto res = c.Get("/series?tag=Live::A&res=min&from=0&to=" + std::to_string(kT0 + 3600000));
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(json::parse(res->body)["points"].size() == 5);
  CHECK(res->body == api.series({{"tag", "Live::A"}, {"res", "min"}, {"from", "0"}, {"to", std::to_string(kT0 + 3600000)}}).body);

  auto tags = c.Get("/tags?limit=1");
  REQUIRE(tags);
  CHECK(json::parse(tags->body).size() == 1);

  auto up = c.Post("/upload", "tag,utcMillis,value,status\nUp::B,5,1.0,0\n", "text/csv");
  REQUIRE(up);
  CHECK(json::parse(up->body)["imported"] == 1);
  auto down = c.Get("/download?tag=Up::B");
  REQUIRE(down);
  CHECK(down->body == "tag,utcMillis,value,status\r\nUp::B,5,1.0,0\r\n");
  auto ui = c.Get("/ui/");
  REQUIRE(ui);
  CHECK(ui->status == 200);
  auto pre = c.Options("/series");
  REQUIRE(pre);
  CHECK(pre->status == 204);

  http.stop();
  topo.stop();
  ingest.stop();
}
