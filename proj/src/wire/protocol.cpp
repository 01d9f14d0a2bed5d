#include "rtdap/wire/protocol.hpp"

#include <json.hpp>

#include "rtdap/core/error.hpp"

namespace rtdap::wire {
namespace {

using ordered_json = nlohmann::ordered_json;

const nlohmann::json& field(const nlohmann::json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw Error(Errc::MissingField, name);
  return *it;
}

template <class T>
T unsigned_field(const nlohmann::json& obj, const char* name) {
  const auto& f = field(obj, name);
  if (!f.is_number_unsigned() || f.get<std::uint64_t>() > std::numeric_limits<T>::max())
    throw Error(Errc::BadJson, std::string(name) + " must be an unsigned integer");
  return f.get<T>();
}

Value decode_value(const nlohmann::json& v) {
  switch (v.type()) {
    case nlohmann::json::value_t::number_float: return v.get<double>();
    case nlohmann::json::value_t::number_integer:
    case nlohmann::json::value_t::number_unsigned:
      if (v.is_number_unsigned() && v.get<std::uint64_t>() > std::uint64_t(std::numeric_limits<std::int64_t>::max()))
        return v.get<double>();
      return v.get<std::int64_t>();
    case nlohmann::json::value_t::boolean: return v.get<bool>();
    case nlohmann::json::value_t::string: {
      auto s = v.get<std::string>();
      if (s.size() > kMaxStringValue) throw Error(Errc::WrongValueKind, "string value longer than 256 bytes");
      return s;
    }
    default: throw Error(Errc::WrongValueKind, "value must be a number, boolean or string");
  }
}

}  // namespace

std::string_view to_string(Encoding e) noexcept { return e == Encoding::Deflate ? "deflate" : "none"; }

std::string encode_request(const Request& r) {
  ordered_json out;
  if (const auto* d = std::get_if<StreamDefinition>(&r)) {
    out["type"] = "D";
    ordered_json p;
    p["id"] = d->id;
    p["tag"] = d->tag;
    p["type"] = std::string(1, to_char(d->kind));
    if (d->encoding == Encoding::Deflate) p["enc"] = "deflate";
    out["parameter"] = std::move(p);
  } else {
    const auto& rec = std::get<DataRecord>(r);
    out["type"] = "d";
    ordered_json p;
    p["id"] = rec.id;
    p["time"] = rec.time;
    std::visit([&](const auto& v) { p["value"] = v; }, rec.value);
    p["status"] = rec.status;
    out["parameter"] = std::move(p);
  }
  return out.dump();
}

Request decode_request(std::string_view json) {
  nlohmann::json doc = nlohmann::json::parse(json, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(Errc::BadJson, "request is not a JSON object");

  const auto& type = field(doc, "type");
  if (!type.is_string()) throw Error(Errc::UnknownType, "type must be a string");
  const auto& t = type.get_ref<const std::string&>();
  if (t != "D" && t != "d") throw Error(Errc::UnknownType, t);

  const auto& p = field(doc, "parameter");
  if (!p.is_object()) throw Error(Errc::BadJson, "parameter must be an object");

  if (t == "D") {
    StreamDefinition d;
    d.id = unsigned_field<std::uint32_t>(p, "id");
    const auto& tag = field(p, "tag");
    if (!tag.is_string()) throw Error(Errc::BadJson, "tag must be a string");
    d.tag = tag.get<std::string>();
    const auto& kind = field(p, "type");
    if (!kind.is_string() || kind.get_ref<const std::string&>().size() != 1 ||
        !kind_from_char(kind.get_ref<const std::string&>()[0]))
      throw Error(Errc::WrongValueKind, "stream type must be one of F, I, B, S");
    d.kind = *kind_from_char(kind.get_ref<const std::string&>()[0]);
    if (auto enc = p.find("enc"); enc != p.end()) {
      if (*enc == "deflate")
        d.encoding = Encoding::Deflate;
      else if (*enc == "none")
        d.encoding = Encoding::None;
      else
        throw Error(Errc::BadJson, "enc must be none or deflate");
    }
    return d;
  }

  DataRecord rec;
  rec.id = unsigned_field<std::uint32_t>(p, "id");
  rec.time = unsigned_field<std::uint64_t>(p, "time");
  rec.value = decode_value(field(p, "value"));
  if (p.contains("status")) rec.status = unsigned_field<std::uint8_t>(p, "status");
  return rec;
}

}  // namespace rtdap::wire
