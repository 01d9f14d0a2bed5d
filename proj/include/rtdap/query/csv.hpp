#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rtdap/core/value.hpp"

namespace rtdap::query {

struct CsvField {
  std::string text;
  bool quoted = false;
};

/// RFC 4180 reader: comma separated, CRLF or LF record ends, double quotes
/// with "" escapes, quoted fields may span lines.
class CsvReader {
 public:
  explicit CsvReader(std::string_view text) : text_(text) {}

  /// Next record, or nullopt at end of input. Throws Error(CorruptData) on
  /// a malformed quote.
  std::optional<std::vector<CsvField>> next();

  /// 1-based physical line on which the last returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

inline constexpr std::string_view kCsvHeader = "tag,utcMillis,value,status";

/// Value cell: a quoted field is a string; unquoted true/false is a bool; an
/// integer literal is Int; anything else must parse fully as a double.
/// Throws Error(WrongValueKind).
Value parse_csv_value(const CsvField& f);

/// Float always carries a '.' or exponent so an upload of the output keeps
/// its kind; the shortest round-trip form is used.
std::string format_csv_value(const Value& v);

/// Quotes when the field contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view s);

}  // namespace rtdap::query
