#include "rtdap/ingest/session.hpp"

#include "rtdap/core/error.hpp"
#include "rtdap/log/message_log.hpp"
#include "rtdap/tsdb/store.hpp"

namespace rtdap::ingest {

Session::Session(std::uint64_t conn_id, tsdb::Store& store, log::MessageLog& log, IngestCounters& counters,
                 std::size_t max_frame)
    : id_(conn_id), store_(store), log_(log), counters_(counters), reader_(max_frame) {}

Session::~Session() = default;

void Session::on_stream_definition(const wire::StreamDefinition& d) {
  const auto name = parse_tag(d.tag);
  if (auto it = bindings_.find(d.id); it != bindings_.end()) {
    const auto existing = store_.find_tag(name);
    if (!existing || *existing != it->second.tag || it->second.kind != d.kind)
      throw Error(Errc::StreamIdConflict, "stream " + std::to_string(d.id) + " is already bound");
    return;
  }
  bindings_.emplace(d.id, Binding{store_.register_tag(name), d.kind});
}

Sample Session::translate(const wire::DataRecord& r) const {
  auto it = bindings_.find(r.id);
  if (it == bindings_.end()) throw Error(Errc::UnboundStream, "stream " + std::to_string(r.id) + " is not defined");
  const auto& b = it->second;
  Value v = r.value;
  if (b.kind == ValueKind::Float) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) v = static_cast<double>(*i);
  }
  if (kind_of(v) != b.kind) throw Error(Errc::WrongValueKind, "value kind differs from the stream definition");
  return Sample{b.tag, r.time, std::move(v), r.status};
}

void Session::on_data_record(const wire::DataRecord& r) {
  log_.append(translate(r));
  ++accepted_;
  ++counters_.accepted;
}

void Session::reject() {
  ++rejected_;
  ++counters_.rejected;
}

void Session::handle_body(std::string_view body) {
  try {
    auto req = wire::decode_request(body);
    if (auto* d = std::get_if<wire::StreamDefinition>(&req)) {
      on_stream_definition(*d);
    } else {
      pending_.push_back(translate(std::get<wire::DataRecord>(req)));
    }
  } catch (const Error&) {
    reject();
  }
}

void Session::flush() {
  if (pending_.empty()) return;
  log_.append_batch(pending_);
  accepted_ += pending_.size();
  counters_.accepted += pending_.size();
  pending_.clear();
}

void Session::feed(std::string_view bytes) {
  counters_.bytes_in += bytes.size();
  reader_.feed(bytes);
  try {
    while (auto body = reader_.next()) {
      ++counters_.frames;
      handle_body(*body);
    }
  } catch (...) {
    flush();
    ++counters_.protocol_errors;
    throw;
  }
  flush();
}

}  // namespace rtdap::ingest
