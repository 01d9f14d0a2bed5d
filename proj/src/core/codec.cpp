#include "rtdap/core/codec.hpp"

#include "rtdap/core/error.hpp"

namespace rtdap {

void encode_value(std::string& out, const Value& v) {
  switch (kind_of(v)) {
    case ValueKind::Float: bytes::put_f64(out, std::get<double>(v)); break;
    case ValueKind::Int: bytes::put_be64(out, static_cast<std::uint64_t>(std::get<std::int64_t>(v))); break;
    case ValueKind::Bool: out.push_back(std::get<bool>(v) ? 1 : 0); break;
    case ValueKind::Str: {
      const auto& s = std::get<std::string>(v);
      bytes::put_be16(out, static_cast<std::uint16_t>(s.size()));
      out.append(s);
      break;
    }
  }
}

Value decode_value(bytes::Reader& in, ValueKind kind) {
  switch (kind) {
    case ValueKind::Float: return in.f64();
    case ValueKind::Int: return static_cast<std::int64_t>(in.be64());
    case ValueKind::Bool: return in.u8() != 0;
    case ValueKind::Str: {
      auto n = in.be16();
      return std::string(in.take(n));
    }
  }
  throw Error(Errc::CorruptData, "bad value kind");
}

void encode_sample(std::string& out, const Sample& s) {
  bytes::put_be32(out, s.tag.value);
  bytes::put_be64(out, s.time);
  out.push_back(to_char(kind_of(s.value)));
  out.push_back(static_cast<char>(s.status));
  encode_value(out, s.value);
}

Sample decode_sample(bytes::Reader& in) {
  Sample s;
  s.tag.value = in.be32();
  s.time = in.be64();
  auto kind = kind_from_char(static_cast<char>(in.u8()));
  if (!kind) throw Error(Errc::CorruptData, "bad value kind");
  s.status = in.u8();
  s.value = decode_value(in, *kind);
  return s;
}

}  // namespace rtdap
