#include "rtdap/core/error.hpp"

namespace rtdap {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedTag: return "MalformedTag";
    case Errc::BadKeyLength: return "BadKeyLength";
    case Errc::BadJson: return "BadJson";
    case Errc::UnknownType: return "UnknownType";
    case Errc::MissingField: return "MissingField";
    case Errc::WrongValueKind: return "WrongValueKind";
    case Errc::BodyTooLarge: return "BodyTooLarge";
    case Errc::BadFlag: return "BadFlag";
    case Errc::CorruptDeflate: return "CorruptDeflate";
    case Errc::Truncated: return "Truncated";
    case Errc::BindFailed: return "BindFailed";
    case Errc::StreamIdConflict: return "StreamIdConflict";
    case Errc::UnboundStream: return "UnboundStream";
    case Errc::IoError: return "IoError";
    case Errc::UnknownGroup: return "UnknownGroup";
    case Errc::OffsetBeyondHead: return "OffsetBeyondHead";
    case Errc::UnregisteredTag: return "UnregisteredTag";
    case Errc::UnknownTag: return "UnknownTag";
    case Errc::WrongBucket: return "WrongBucket";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::ConnectionLost: return "ConnectionLost";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::BadRange: return "BadRange";
    case Errc::BadResolution: return "BadResolution";
    case Errc::CorruptData: return "CorruptData";
  }
  return "Unknown";
}

}  // namespace rtdap
