#include "rtdap/analytics/window_job.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "rtdap/agg/bolt.hpp"
#include "rtdap/core/error.hpp"
#include "rtdap/log/message_log.hpp"
#include "rtdap/tsdb/store.hpp"

namespace rtdap::analytics {
namespace {

std::uint64_t abs_diff(Timestamp a, Timestamp b) { return a > b ? a - b : b - a; }

// Index of the nearest time in `times` to t, if within tolerance.
std::optional<std::size_t> nearest(const std::vector<Timestamp>& times, Timestamp t, Timestamp tolerance) {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  std::optional<std::size_t> best;
  if (it != times.begin()) best = static_cast<std::size_t>(it - times.begin() - 1);
  if (it != times.end() && (!best || abs_diff(*it, t) < abs_diff(times[*best], t)))
    best = static_cast<std::size_t>(it - times.begin());
  if (best && abs_diff(times[*best], t) > tolerance) return std::nullopt;
  return best;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.size();
  const auto cols = rows ? j.at(0).size() : 0;
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j.at(r).size() != cols) throw Error(Errc::DimensionMismatch, "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

JoinedRows join_nearest(const std::vector<Series>& series, Timestamp tolerance) {
  JoinedRows out;
  if (series.empty()) return out;
  const auto& ref = series.front();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < ref.times.size(); ++i) {
    std::vector<double> row{ref.values[i]};
    bool complete = true;
    for (std::size_t s = 1; s < series.size() && complete; ++s) {
      auto idx = nearest(series[s].times, ref.times[i], tolerance);
      if (!idx) complete = false;
      else row.push_back(series[s].values[*idx]);
    }
    if (!complete) continue;
    out.times.push_back(ref.times[i]);
    rows.push_back(std::move(row));
  }
  out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(series.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < series.size(); ++c) out.values(r, c) = rows[r][c];
  return out;
}

Series read_series(tsdb::Store& store, TagId tag, Timestamp from, Timestamp to) {
  Series s;
  for (const auto& rec : store.scan_raw(tag, from, to)) {
    double v;
    if (const auto* d = std::get_if<double>(&rec.value)) v = *d;
    else if (const auto* i = std::get_if<std::int64_t>(&rec.value)) v = static_cast<double>(*i);
    else continue;
    s.times.push_back(rec.time);
    s.values.push_back(v);
  }
  return s;
}

JoinedRows extract_training_set(tsdb::Store& store, const std::vector<TagName>& tags, Timestamp from, Timestamp to,
                                Timestamp tolerance) {
  std::vector<Series> series;
  for (const auto& name : tags) {
    auto id = store.find_tag(name);
    if (!id) throw Error(Errc::UnknownTag, "unknown tag " + name.str());
    series.push_back(read_series(store, *id, from, to));
  }
  return join_nearest(series, tolerance);
}

void WindowJobSpec::validate() const {
  if (input_tags.empty()) throw Error(Errc::InvalidConfig, "job needs at least one input tag");
  if (period_ms == 0) throw Error(Errc::InvalidConfig, "period must be positive");
  if (window_ms < period_ms) throw Error(Errc::InvalidConfig, "window must be at least one period");
  if (components < 1) throw Error(Errc::InvalidConfig, "k must be at least 1");
}

WindowJobSpec job_from_json(const nlohmann::json& j) {
  try {
    WindowJobSpec s;
    for (const auto& t : j.at("inputTags")) s.input_tags.push_back(parse_tag(t.get<std::string>()));
    s.output_tag = parse_tag(j.at("outputTag").get<std::string>());
    if (j.contains("targetTag")) s.target_tag = parse_tag(j.at("targetTag").get<std::string>());
    s.window_ms = j.value("window", s.window_ms);
    s.period_ms = j.value("period", s.period_ms);
    s.tolerance_ms = j.value("tolerance", s.tolerance_ms);
    s.components = j.value("k", s.components);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("job config: ") + e.what());
  }
}

nlohmann::json job_to_json(const WindowJobSpec& s) {
  nlohmann::json j;
  auto& inputs = j["inputTags"] = nlohmann::json::array();
  for (const auto& t : s.input_tags) inputs.push_back(t.str());
  j["outputTag"] = s.output_tag.str();
  if (s.target_tag) j["targetTag"] = s.target_tag->str();
  j["window"] = s.window_ms;
  j["period"] = s.period_ms;
  if (s.tolerance_ms) j["tolerance"] = s.tolerance_ms;
  j["k"] = s.components;
  return j;
}

nlohmann::json model_to_json(const Model& m) {
  nlohmann::json j;
  j["features"] = m.features();
  j["kept"] = m.kept_columns();
  j["xMean"] = to_std(m.x_mean());
  j["xStd"] = to_std(m.x_std());
  j["yMean"] = m.y_mean();
  j["yStd"] = m.y_std();
  j["W"] = matrix_to_json(m.weights());
  j["P"] = matrix_to_json(m.loadings());
  j["q"] = to_std(m.response_loadings());
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  try {
    return Model::restore(j.at("features").get<Eigen::Index>(), j.at("kept").get<std::vector<Eigen::Index>>(),
                          to_vector(j.at("xMean").get<std::vector<double>>()),
                          to_vector(j.at("xStd").get<std::vector<double>>()), j.at("yMean").get<double>(),
                          j.at("yStd").get<double>(), matrix_from_json(j.at("W")), matrix_from_json(j.at("P")),
                          to_vector(j.at("q").get<std::vector<double>>()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("model: ") + e.what());
  }
}

Model fit_job(tsdb::Store& store, const WindowJobSpec& spec, Timestamp from, Timestamp to) {
  if (!spec.target_tag) throw Error(Errc::InvalidConfig, "fitting needs a targetTag");
  // The target leads the join so each training row is one response sample.
  std::vector<TagName> tags{*spec.target_tag};
  tags.insert(tags.end(), spec.input_tags.begin(), spec.input_tags.end());
  auto joined = extract_training_set(store, tags, from, to, spec.tolerance());
  if (joined.rows() < 2) throw Error(Errc::InsufficientData, "fewer than 2 joined training rows");
  const Eigen::VectorXd y = joined.values.col(0);
  const Eigen::MatrixXd X = joined.values.rightCols(joined.values.cols() - 1);
  return Model::fit(X, y, spec.components);
}

Timestamp SystemClock::now() { return wall_clock_ms(); }

void SystemClock::sleep_until(Timestamp t) {
  const auto n = now();
  if (t > n) std::this_thread::sleep_for(std::chrono::milliseconds(t - n));
}

void LogSink::emit(const Sample& s) { log_.append(s); }

void StoreSink::emit(const Sample& s) { agg::AggregationWriter(store_).write(std::span(&s, 1)); }

WindowJob::WindowJob(WindowJobSpec spec, Model model, tsdb::Store& store, PredictionSink& sink)
    : spec_(std::move(spec)), model_(std::move(model)), store_(store), sink_(sink) {
  spec_.validate();
  if (model_.features() != static_cast<Eigen::Index>(spec_.input_tags.size()))
    throw Error(Errc::DimensionMismatch, "model features differ from the job's input count");
  output_ = store_.register_tag(spec_.output_tag);
}

std::optional<double> WindowJob::tick(Timestamp now) {
  const Timestamp from = now > spec_.window_ms ? now - spec_.window_ms : 0;
  std::optional<double> result;
  std::vector<Series> series;
  bool ok = true;
  for (const auto& name : spec_.input_tags) {
    auto id = store_.find_tag(name);
    if (!id) {
      ok = false;
      break;
    }
    series.push_back(read_series(store_, *id, from, now));
  }
  if (ok) {
    auto joined = join_nearest(series, spec_.tolerance());
    if (joined.rows() > 0) {
      const Eigen::VectorXd x = joined.values.colwise().mean().transpose();
      result = model_.predict(x);
    }
  }
  if (result) sink_.emit(Sample{output_, now, *result, 0});
  std::lock_guard lock(mu_);
  ++stats_.ticks;
  if (result) ++stats_.emitted;
  else ++stats_.skipped;
  return result;
}

JobStats WindowJob::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

JobStats run_window_job(WindowJob& job, Clock& clock, Timestamp start, Timestamp duration,
                        const std::atomic<bool>* stop) {
  const auto period = job.spec().period_ms;
  const auto before = job.stats();
  const Timestamp end = duration > ~Timestamp{0} - start ? ~Timestamp{0} : start + duration;
  auto stopped = [&] { return stop && stop->load(); };
  for (Timestamp next = start + period; next <= end && next > start && !stopped(); next += period) {
    while (clock.now() < next && !stopped()) clock.sleep_until(std::min(next, clock.now() + 100));
    if (stopped()) break;
    job.tick(next);
  }
  const auto after = job.stats();
  return {after.ticks - before.ticks, after.emitted - before.emitted, after.skipped - before.skipped};
}

}  // namespace rtdap::analytics
