#pragma once

#include <string>

#include "rtdap/core/bytes.hpp"
#include "rtdap/core/value.hpp"

namespace rtdap {

/// Binary payload of a value, kind encoded separately by the caller:
/// F and I as 8 bytes big-endian, B as one byte, S as BE16 length + bytes.
void encode_value(std::string& out, const Value& v);
Value decode_value(bytes::Reader& in, ValueKind kind);

/// BE32 tag ‖ BE64 time ‖ kind ‖ status ‖ value.
void encode_sample(std::string& out, const Sample& s);
Sample decode_sample(bytes::Reader& in);

}  // namespace rtdap
