#include "rtdap/sim/source.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "rtdap/core/error.hpp"
#include "rtdap/sim/ingest_client.hpp"

namespace rtdap::sim {
namespace {

const char* waveform_name(Waveform w) {
  switch (w) {
    case Waveform::Sine: return "sine";
    case Waveform::Ramp: return "ramp";
    case Waveform::RandomWalk: return "randomWalk";
    case Waveform::Constant: return "constant";
  }
  return "sine";
}

Waveform waveform_from(const std::string& s) {
  if (s == "sine") return Waveform::Sine;
  if (s == "ramp") return Waveform::Ramp;
  if (s == "randomWalk") return Waveform::RandomWalk;
  if (s == "constant") return Waveform::Constant;
  throw Error(Errc::InvalidConfig, "unknown waveform " + s);
}

// Per-tag generator so adding a tag does not change the others' sequences.
std::mt19937_64 tag_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(index), std::uint64_t{0x5eed}};
  return std::mt19937_64(seq);
}

Timestamp step_time(const SourceConfig& cfg, Timestamp start, std::uint64_t i) {
  return start + static_cast<Timestamp>(std::floor(static_cast<double>(i) * 1000.0 / cfg.rate_per_tag));
}

}  // namespace

std::uint64_t SourceConfig::steps() const noexcept {
  return static_cast<std::uint64_t>(std::llround(std::floor(duration * rate_per_tag + 1e-9)));
}

void SourceConfig::validate() const {
  if (!(rate_per_tag > 0) || rate_per_tag > 1000) throw Error(Errc::InvalidConfig, "ratePerTag must be in (0, 1000]");
  if (!(duration >= 0)) throw Error(Errc::InvalidConfig, "duration must be non-negative");
  if (tags.empty()) throw Error(Errc::InvalidConfig, "source needs at least one tag");
  for (const auto& t : tags)
    if (!(t.period > 0)) throw Error(Errc::InvalidConfig, "waveform period must be positive");
}

SourceConfig source_from_json(const nlohmann::json& j) {
  try {
    SourceConfig c;
    for (const auto& t : j.at("tags")) {
      SourceTag tag{parse_tag(t.at("name").get<std::string>())};
      tag.waveform = waveform_from(t.value("waveform", std::string("sine")));
      tag.amplitude = t.value("amplitude", tag.amplitude);
      tag.period = t.value("period", tag.period);
      tag.baseline = t.value("baseline", tag.baseline);
      c.tags.push_back(std::move(tag));
    }
    c.rate_per_tag = j.value("ratePerTag", c.rate_per_tag);
    c.duration = j.value("duration", c.duration);
    c.seed = j.value("seed", c.seed);
    c.logical_clock = j.value("logicalClock", c.logical_clock);
    c.start = j.value("start", c.start);
    c.realtime = j.value("realtime", c.realtime);
    const auto enc = j.value("encoding", std::string("none"));
    if (enc == "deflate") c.encoding = wire::Encoding::Deflate;
    else if (enc != "none") throw Error(Errc::InvalidConfig, "encoding must be none or deflate");
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("source config: ") + e.what());
  }
}

nlohmann::json source_to_json(const SourceConfig& c) {
  nlohmann::json j;
  auto& tags = j["tags"] = nlohmann::json::array();
  for (const auto& t : c.tags)
    tags.push_back({{"name", t.name.str()},
                    {"waveform", waveform_name(t.waveform)},
                    {"amplitude", t.amplitude},
                    {"period", t.period},
                    {"baseline", t.baseline}});
  j["ratePerTag"] = c.rate_per_tag;
  j["duration"] = c.duration;
  j["seed"] = c.seed;
  j["logicalClock"] = c.logical_clock;
  j["start"] = c.start;
  j["realtime"] = c.realtime;
  j["encoding"] = c.encoding == wire::Encoding::Deflate ? "deflate" : "none";
  return j;
}

double waveform_value(const SourceTag& t, double seconds, double walk) {
  switch (t.waveform) {
    case Waveform::Sine: return t.baseline + t.amplitude * std::sin(2 * std::numbers::pi * seconds / t.period);
    case Waveform::Ramp: {
      const double phase = seconds / t.period;
      return t.baseline + t.amplitude * (phase - std::floor(phase));
    }
    case Waveform::RandomWalk: return t.baseline + walk;
    case Waveform::Constant: return t.baseline;
  }
  return t.baseline;
}

std::vector<wire::StreamDefinition> definitions(const SourceConfig& cfg) {
  std::vector<wire::StreamDefinition> out;
  for (std::size_t i = 0; i < cfg.tags.size(); ++i)
    out.push_back({static_cast<std::uint32_t>(i + 1), cfg.tags[i].name.str(), ValueKind::Float, cfg.encoding});
  return out;
}

namespace {

// Steps a source one record at a time; shared by generate() and run_source().
class Stepper {
 public:
  explicit Stepper(const SourceConfig& cfg) : cfg_(cfg), walk_(cfg.tags.size(), 0.0) {
    for (std::size_t i = 0; i < cfg.tags.size(); ++i) rngs_.push_back(tag_rng(cfg.seed, i));
  }

  wire::DataRecord record(std::size_t tag, std::uint64_t step, Timestamp ts) {
    const auto& t = cfg_.tags[tag];
    if (t.waveform == Waveform::RandomWalk) walk_[tag] += t.amplitude * normal_(rngs_[tag]);
    const double seconds = static_cast<double>(step) / cfg_.rate_per_tag;
    return {static_cast<std::uint32_t>(tag + 1), ts, waveform_value(t, seconds, walk_[tag]), 0};
  }

 private:
  const SourceConfig& cfg_;
  std::vector<std::mt19937_64> rngs_;
  std::vector<double> walk_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace

std::vector<wire::DataRecord> generate(const SourceConfig& cfg, Timestamp start) {
  cfg.validate();
  Stepper stepper(cfg);
  std::vector<wire::DataRecord> out;
  const auto steps = cfg.steps();
  out.reserve(steps * cfg.tags.size());
  for (std::uint64_t i = 0; i < steps; ++i)
    for (std::size_t t = 0; t < cfg.tags.size(); ++t) out.push_back(stepper.record(t, i, step_time(cfg, start, i)));
  return out;
}

SourceReport run_source(const SourceConfig& cfg, const net::Endpoint& target) {
  cfg.validate();
  SourceReport report;
  const auto t0 = std::chrono::steady_clock::now();
  const Timestamp wall0 = wall_clock_ms();
  const Timestamp start = cfg.start ? cfg.start : wall0;
  try {
    auto client = IngestClient::connect(target, cfg.encoding);
    for (const auto& d : definitions(cfg)) {
      client.send(d);
      ++report.defined;
    }
    client.flush();
    Stepper stepper(cfg);
    const auto steps = cfg.steps();
    for (std::uint64_t i = 0; i < steps; ++i) {
      if (cfg.realtime) {
        const auto due = t0 + std::chrono::duration<double>(static_cast<double>(i) / cfg.rate_per_tag);
        if (due > std::chrono::steady_clock::now()) {
          client.flush();
          std::this_thread::sleep_until(due);
        }
      }
      const Timestamp ts = cfg.logical_clock ? step_time(cfg, start, i) : wall_clock_ms();
      for (std::size_t t = 0; t < cfg.tags.size(); ++t) {
        client.send(stepper.record(t, i, ts));
        ++report.sent;
      }
    }
    client.finish();
  } catch (const Error& e) {
    report.error = e.what();
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace rtdap::sim
