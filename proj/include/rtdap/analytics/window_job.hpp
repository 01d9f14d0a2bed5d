#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <json.hpp>
#include <optional>
#include <vector>

#include "rtdap/analytics/pls.hpp"
#include "rtdap/core/tag.hpp"
#include "rtdap/core/time.hpp"
#include "rtdap/core/value.hpp"

namespace rtdap::tsdb {
class Store;
}
namespace rtdap::log {
class MessageLog;
}

namespace rtdap::analytics {

using Model = PlsModel<double>;

/// Numeric points of one tag in time order (bool and string samples skipped).
struct Series {
  std::vector<Timestamp> times;
  std::vector<double> values;
};

/// Rows aligned on the first series' timestamps; column j is series j.
struct JoinedRows {
  std::vector<Timestamp> times;
  Eigen::MatrixXd values;

  std::size_t rows() const noexcept { return times.size(); }
};

/// For each point of series[0], takes the nearest point of every other
/// series within `tolerance` ms (earlier point on a tie). Rows missing any
/// input are dropped.
JoinedRows join_nearest(const std::vector<Series>& series, Timestamp tolerance);

Series read_series(tsdb::Store& store, TagId tag, Timestamp from, Timestamp to);

/// Joined history of `tags` over [from, to). Throws Error(UnknownTag).
JoinedRows extract_training_set(tsdb::Store& store, const std::vector<TagName>& tags, Timestamp from, Timestamp to,
                                Timestamp tolerance);

struct WindowJobSpec {
  std::vector<TagName> input_tags;
  TagName output_tag{"rtdap", {"inferred"}};
  /// Training response; only used when fitting.
  std::optional<TagName> target_tag;
  Timestamp window_ms = 10 * 60'000;
  Timestamp period_ms = 60'000;
  /// Join tolerance; 0 means period/2.
  Timestamp tolerance_ms = 0;
  int components = 2;

  Timestamp tolerance() const noexcept { return tolerance_ms ? tolerance_ms : period_ms / 2; }
  /// Throws Error(InvalidConfig).
  void validate() const;
};

WindowJobSpec job_from_json(const nlohmann::json& j);
nlohmann::json job_to_json(const WindowJobSpec& spec);
nlohmann::json model_to_json(const Model& m);
Model model_from_json(const nlohmann::json& j);

/// Fits spec.components components on the joined [inputs..., target] history.
Model fit_job(tsdb::Store& store, const WindowJobSpec& spec, Timestamp from, Timestamp to);

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() = 0;
  virtual void sleep_until(Timestamp t) = 0;
};

/// Time moves only when asked to; sleep_until jumps.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start = 0) : now_(start) {}
  Timestamp now() override { return now_; }
  void sleep_until(Timestamp t) override { now_ = std::max(now_, t); }

 private:
  Timestamp now_;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() override;
  void sleep_until(Timestamp t) override;
};

class PredictionSink {
 public:
  virtual ~PredictionSink() = default;
  virtual void emit(const Sample& s) = 0;
};

/// Appends predictions to the message log, so they take the same path as
/// ingested records (raw + aggregates via the topology).
class LogSink final : public PredictionSink {
 public:
  explicit LogSink(log::MessageLog& log) : log_(log) {}
  void emit(const Sample& s) override;

 private:
  log::MessageLog& log_;
};

/// Writes predictions straight into the store (raw and aggregates); for
/// offline replays with no topology running.
class StoreSink final : public PredictionSink {
 public:
  explicit StoreSink(tsdb::Store& store) : store_(store) {}
  void emit(const Sample& s) override;

 private:
  tsdb::Store& store_;
};

struct JobStats {
  std::uint64_t ticks = 0;
  std::uint64_t emitted = 0;
  std::uint64_t skipped = 0;
};

/// One periodically executed model. Each tick reads the last window of each
/// input, joins it, and predicts on the mean joined row.
class WindowJob {
 public:
  /// Registers the output tag. Throws DimensionMismatch if the model's
  /// feature count differs from the number of inputs.
  WindowJob(WindowJobSpec spec, Model model, tsdb::Store& store, PredictionSink& sink);

  /// Returns the emitted value, or nullopt for a skipped tick (no joined rows
  /// in the window, or an input tag not registered yet).
  std::optional<double> tick(Timestamp now);

  JobStats stats() const;
  const WindowJobSpec& spec() const noexcept { return spec_; }
  const Model& model() const noexcept { return model_; }

 private:
  WindowJobSpec spec_;
  Model model_;
  tsdb::Store& store_;
  PredictionSink& sink_;
  TagId output_;
  mutable std::mutex mu_;
  JobStats stats_;
};

/// Ticks at start + i*period for i = 1.. while within start + duration, or
/// until `stop` is set.
JobStats run_window_job(WindowJob& job, Clock& clock, Timestamp start, Timestamp duration,
                        const std::atomic<bool>* stop = nullptr);

}  // namespace rtdap::analytics
