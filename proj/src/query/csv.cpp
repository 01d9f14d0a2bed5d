#include "rtdap/query/csv.hpp"

#include <charconv>
#include <cmath>

#include "rtdap/core/error.hpp"

namespace rtdap::query {

std::optional<std::vector<CsvField>> CsvReader::next() {
  if (pos_ >= text_.size()) return std::nullopt;
  record_line_ = line_;
  std::vector<CsvField> fields(1);
  while (pos_ < text_.size()) {
    const char c = text_[pos_];
    auto& f = fields.back();
    if (c == '"' && f.text.empty() && !f.quoted) {
      f.quoted = true;
      ++pos_;
      while (true) {
        if (pos_ >= text_.size()) throw Error(Errc::CorruptData, "unterminated quoted field");
        const char q = text_[pos_++];
        if (q == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            f.text += '"';
            ++pos_;
            continue;
          }
          break;
        }
        if (q == '\n') ++line_;
        f.text += q;
      }
      if (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '\n' && text_[pos_] != '\r')
        throw Error(Errc::CorruptData, "text after a closing quote");
      continue;
    }
    if (c == ',') {
      fields.emplace_back();
      ++pos_;
      continue;
    }
    if (c == '\r' || c == '\n') {
      if (c == '\r' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '\n') ++pos_;
      ++pos_;
      ++line_;
      return fields;
    }
    if (f.quoted) throw Error(Errc::CorruptData, "text after a closing quote");
    if (c == '"') throw Error(Errc::CorruptData, "quote inside an unquoted field");
    f.text += c;
    ++pos_;
  }
  return fields;
}

Value parse_csv_value(const CsvField& f) {
  if (f.quoted) {
    if (f.text.size() > kMaxStringValue) throw Error(Errc::WrongValueKind, "string value longer than 256 bytes");
    return f.text;
  }
  const auto& s = f.text;
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.empty()) throw Error(Errc::WrongValueKind, "empty value");
  const char* end = s.data() + s.size();
  std::int64_t i;
  if (auto r = std::from_chars(s.data(), end, i); r.ec == std::errc{} && r.ptr == end) return i;
  double d;
  if (auto r = std::from_chars(s.data(), end, d); r.ec == std::errc{} && r.ptr == end && std::isfinite(d)) return d;
  throw Error(Errc::WrongValueKind, "value is not a number, bool or quoted string");
}

std::string format_csv_value(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, *d);
    std::string s(buf, r.ptr);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
  }
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  // Strings are always quoted, that is what marks their kind.
  const auto& s = std::get<std::string>(v);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace rtdap::query
