#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rtdap {

enum class Errc {
  MalformedTag,
  BadKeyLength,
  BadJson,
  UnknownType,
  MissingField,
  WrongValueKind,
  BodyTooLarge,
  BadFlag,
  CorruptDeflate,
  Truncated,
  BindFailed,
  StreamIdConflict,
  UnboundStream,
  IoError,
  UnknownGroup,
  OffsetBeyondHead,
  UnregisteredTag,
  UnknownTag,
  WrongBucket,
  DegenerateInput,
  DimensionMismatch,
  InsufficientData,
  ConnectionLost,
  InvalidConfig,
  BadRange,
  BadResolution,
  CorruptData,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the platform carries one of the codes above so
/// callers (and the HTTP layer) can branch on kind rather than on text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  explicit Error(Errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rtdap
