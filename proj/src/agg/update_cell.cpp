#include "rtdap/agg/update_cell.hpp"

#include "rtdap/core/error.hpp"

namespace rtdap::agg {

tsdb::AggCell update_cell(const std::optional<tsdb::AggCell>& cell, const Sample& rec, Resolution res) {
  const auto* v = std::get_if<double>(&rec.value);
  if (!v) throw Error(Errc::WrongValueKind, "aggregates take float samples only");
  const Timestamp bucket = bucket_of(rec.time, res);
  if (!cell) {
    tsdb::AggCell c;
    c.tag = rec.tag;
    c.resolution = res;
    c.bucket = bucket;
    c.min = c.max = c.close = *v;
    c.close_time = rec.time;
    c.count = 1;
    return c;
  }
  if (cell->resolution != res || cell->bucket != bucket || cell->tag != rec.tag)
    throw Error(Errc::WrongBucket, "sample at " + std::to_string(rec.time) + " outside cell bucket " +
                                       std::to_string(cell->bucket));
  tsdb::AggCell c = *cell;
  if (*v < c.min) c.min = *v;
  if (*v > c.max) c.max = *v;
  if (rec.time >= c.close_time) {
    c.close = *v;
    c.close_time = rec.time;
  }
  ++c.count;
  return c;
}

}  // namespace rtdap::agg
