#pragma once

#include <optional>

#include "rtdap/core/value.hpp"
#include "rtdap/tsdb/cells.hpp"

namespace rtdap::agg {

/// Folds one float sample into a cell of resolution `res`.
///
/// absent -> {v, v, v, ts, 1}; present -> min/max widened, count+1, and
/// close replaced when ts >= closeTs (a later arrival wins a tie).
/// Throws Error(WrongBucket) if ts lies outside the cell's bucket and
/// Error(WrongValueKind) for a non-float sample.
tsdb::AggCell update_cell(const std::optional<tsdb::AggCell>& cell, const Sample& rec, Resolution res);

}  // namespace rtdap::agg
