#include "rtdap/query/api.hpp"

#include <charconv>
#include <json.hpp>

#include "rtdap/agg/bolt.hpp"
#include "rtdap/agg/topology.hpp"
#include "rtdap/core/error.hpp"
#include "rtdap/ingest/server.hpp"
#include "rtdap/log/message_log.hpp"
#include "rtdap/query/csv.hpp"
#include "rtdap/tsdb/store.hpp"

namespace rtdap::query {
namespace {

using json = nlohmann::ordered_json;

constexpr std::size_t kUploadChunk = 5000;
constexpr Timestamp kFarFuture = Timestamp{1} << 62;

Response json_response(const json& j, int status = 200) { return {status, j.dump(), "application/json", {}}; }

Response error_response(int status, Errc code, const std::string& message, json extra = json::object()) {
  json j{{"error", message}, {"code", to_string(code)}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  return json_response(j, status);
}

Response error_response(const Error& e) {
  switch (e.code()) {
    case Errc::UnknownTag: return error_response(404, e.code(), e.what());
    default: return error_response(400, e.code(), e.what());
  }
}

std::optional<std::string> get(const Params& p, const char* name) {
  auto it = p.find(name);
  if (it == p.end()) return std::nullopt;
  return it->second;
}

std::uint64_t get_u64(const Params& p, const char* name, std::uint64_t fallback, Errc on_error = Errc::BadRange) {
  auto v = get(p, name);
  if (!v || v->empty()) return fallback;
  std::uint64_t out;
  auto r = std::from_chars(v->data(), v->data() + v->size(), out);
  if (r.ec != std::errc{} || r.ptr != v->data() + v->size())
    throw Error(on_error, std::string(name) + " must be a non-negative integer");
  return out;
}

TagId resolve_tag(const tsdb::Store& store, const Params& p) {
  auto name = get(p, "tag");
  if (!name || name->empty()) throw Error(Errc::MissingField, "tag is required");
  auto id = store.find_tag(parse_tag(*name));
  if (!id) throw Error(Errc::UnknownTag, "unknown tag " + *name);
  return *id;
}

json value_json(const Value& v) {
  return std::visit([](const auto& x) -> json { return x; }, v);
}

double ms(std::chrono::nanoseconds d) { return std::chrono::duration<double, std::milli>(d).count(); }

}  // namespace

Response QueryApi::tags(const Params& p) const {
  try {
    const auto prefix = get(p, "prefix").value_or("");
    const auto cursor = get(p, "cursor").value_or("");
    const auto limit = get_u64(p, "limit", kDefaultTagLimit, Errc::InvalidConfig);
    if (limit == 0 || limit > kMaxTagLimit) throw Error(Errc::InvalidConfig, "limit must be in 1..10000");
    // One extra row tells whether another page exists.
    auto rows = store_.dictionary().list(prefix, cursor, limit + 1);
    const bool more = rows.size() > limit;
    if (more) rows.pop_back();
    json arr = json::array();
    for (const auto& [name, id] : rows) arr.push_back({{"name", name}, {"id", id.value}});
    auto r = json_response(arr);
    if (more) r.headers.emplace_back("X-Next-Cursor", rows.back().first);
    return r;
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response QueryApi::series(const Params& p) const {
  try {
    const auto tag = resolve_tag(store_, p);
    const auto from = get_u64(p, "from", 0);
    const auto to = get_u64(p, "to", kFarFuture);
    if (from > to) throw Error(Errc::BadRange, "from > to");
    const auto res_text = get(p, "res").value_or("raw");
    json out{{"tag", store_.tag_name(tag)->str()}, {"resolution", res_text}};
    json points = json::array();
    if (res_text == "raw") {
      for (const auto& s : store_.scan_raw(tag, from, to))
        points.push_back({{"t", s.time}, {"v", value_json(s.value)}, {"status", s.status}});
    } else {
      auto res = resolution_from_string(res_text);
      if (!res) throw Error(Errc::BadResolution, "res must be raw, min, hour or day");
      for (const auto& c : store_.read_agg(tag, *res, from, to))
        points.push_back(
            {{"t", c.bucket}, {"min", c.min}, {"max", c.max}, {"close", c.close}, {"count", c.count}});
    }
    out["points"] = std::move(points);
    return json_response(out);
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response QueryApi::upload(std::string_view body) const {
  CsvReader reader(body);
  std::vector<Sample> batch;
  std::uint64_t imported = 0;
  agg::AggregationWriter writer(store_);
  auto commit = [&] {
    if (batch.empty()) return;
    writer.write(batch);
    imported += batch.size();
    batch.clear();
  };
  std::size_t row = 0;
  try {
    auto header = reader.next();
    if (!header) return json_response({{"imported", 0}});
    std::string joined;
    for (std::size_t i = 0; i < header->size(); ++i) joined += (i ? "," : "") + (*header)[i].text;
    if (joined != kCsvHeader) throw Error(Errc::MissingField, "header must be " + std::string(kCsvHeader));
    while (auto rec = reader.next()) {
      if (rec->size() == 1 && rec->front().text.empty() && !rec->front().quoted) continue;  // blank line
      ++row;
      if (rec->size() != 4) throw Error(Errc::MissingField, "expected 4 fields");
      const auto name = parse_tag((*rec)[0].text);
      Sample s;
      CsvField ts = (*rec)[1];
      auto r = std::from_chars(ts.text.data(), ts.text.data() + ts.text.size(), s.time);
      if (ts.text.empty() || r.ec != std::errc{} || r.ptr != ts.text.data() + ts.text.size())
        throw Error(Errc::BadRange, "utcMillis must be a non-negative integer");
      s.value = parse_csv_value((*rec)[2]);
      const auto& st = (*rec)[3].text;
      unsigned status = 0;
      if (!st.empty()) {
        auto sr = std::from_chars(st.data(), st.data() + st.size(), status);
        if (sr.ec != std::errc{} || sr.ptr != st.data() + st.size() || status > 255)
          throw Error(Errc::BadRange, "status must be in 0..255");
      }
      s.status = static_cast<Status>(status);
      s.tag = store_.register_tag(name);
      batch.push_back(std::move(s));
      if (batch.size() >= kUploadChunk) commit();
    }
    commit();
    return json_response({{"imported", imported}});
  } catch (const Error& e) {
    commit();
    return error_response(400, e.code(), e.what(),
                          {{"row", row}, {"line", reader.line()}, {"imported", imported}});
  }
}

Response QueryApi::download(const Params& p) const {
  try {
    const auto tag = resolve_tag(store_, p);
    const auto from = get_u64(p, "from", 0);
    const auto to = get_u64(p, "to", kFarFuture);
    if (from > to) throw Error(Errc::BadRange, "from > to");
    const auto name = csv_escape(store_.tag_name(tag)->str());
    std::string out(kCsvHeader);
    out += "\r\n";
    for (const auto& s : store_.scan_raw(tag, from, to)) {
      out += name;
      out += ',';
      out += std::to_string(s.time);
      out += ',';
      out += format_csv_value(s.value);
      out += ',';
      out += std::to_string(s.status);
      out += "\r\n";
    }
    Response r{200, std::move(out), "text/csv", {}};
    r.headers.emplace_back("Content-Disposition", "attachment; filename=\"series.csv\"");
    return r;
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response QueryApi::stats() const {
  json out;
  ingest::IngestStats in;
  if (sources_.ingest) in = sources_.ingest->stats();
  out["ingest"] = {{"recordsPerSecond", in.records_per_second},
                   {"activeConnections", in.active_connections},
                   {"connectionsTotal", in.connections_total},
                   {"totalAccepted", in.total_accepted},
                   {"totalRejected", in.total_rejected},
                   {"frames", in.frames},
                   {"bytesIn", in.bytes_in},
                   {"protocolErrors", in.protocol_errors}};

  agg::TopologyMetrics tm;
  if (sources_.topology) tm = sources_.topology->metrics();
  const auto& b = tm.total;
  out["topology"] = {{"running", tm.running},
                     {"batches", b.batches},
                     {"records", b.records},
                     {"avgQueueSize", b.avg_queue_size},
                     {"maxQueue", sources_.topology ? sources_.topology->options().max_queue : 0},
                     {"totalExecMs", ms(b.total_exec)},
                     {"scanMs", ms(b.scan)},
                     {"writeMs", ms(b.write)},
                     {"computeMs", ms(b.compute)},
                     {"logicalReads", b.ops.logical_reads},
                     {"logicalWrites", b.ops.logical_writes},
                     {"physicalReads", b.ops.physical_reads},
                     {"physicalWrites", b.ops.physical_writes},
                     {"error", tm.error}};

  json log{{"partitions", 0}, {"records", 0}, {"lag", 0}};
  if (sources_.log) {
    log["partitions"] = sources_.log->partition_count();
    log["records"] = sources_.log->total_records();
    log["lag"] = sources_.log->has_group(sources_.group) ? sources_.log->total_lag(sources_.group) : 0;
  }
  out["log"] = std::move(log);

  const auto s = store_.stats();
  out["store"] = {{"tags", s.tags},
                  {"recordsWritten", s.records_written},
                  {"putBatches", s.put_batches},
                  {"rowsRead", s.rows_read},
                  {"segmentRowsRead", s.segment_rows_read},
                  {"aggReads", s.agg_reads},
                  {"aggWrites", s.agg_writes},
                  {"cacheHits", s.cache.hits},
                  {"cacheMisses", s.cache.misses}};
  return json_response(out);
}

}  // namespace rtdap::query
