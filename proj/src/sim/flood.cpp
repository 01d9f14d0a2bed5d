#include "rtdap/sim/flood.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <random>
#include <thread>

#include "rtdap/core/error.hpp"
#include "rtdap/sim/ingest_client.hpp"
#include "rtdap/wire/frame.hpp"

namespace rtdap::sim {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kChunk = 16 * 1024;

const char* const kWords[] = {"flow",  "level", "pressure", "temperature", "valve", "open",  "closed", "steady",
                              "alarm", "high",  "low",      "pump",        "feed",  "reflux", "bottoms", "overhead"};

std::string filler(std::mt19937_64& rng, std::size_t n) {
  std::string s;
  s.reserve(n + 16);
  while (s.size() < n) {
    s += kWords[rng() % std::size(kWords)];
    s += ' ';
  }
  s.resize(n);
  return s;
}

}  // namespace

void FloodConfig::validate() const {
  if (connections < 1 || connections > 256) throw Error(Errc::InvalidConfig, "connections must be in 1..256");
  if (payload_bytes < 2 || payload_bytes > 524288) throw Error(Errc::InvalidConfig, "payload must be in 2..524288");
  if (!(duration >= 0)) throw Error(Errc::InvalidConfig, "duration must be non-negative");
  if (!(bandwidth_bps >= 0)) throw Error(Errc::InvalidConfig, "bandwidth cap must be non-negative");
  if (streams < 1) throw Error(Errc::InvalidConfig, "need at least one stream");
  if (!(warmup_fraction >= 0 && warmup_fraction < 1)) throw Error(Errc::InvalidConfig, "warmup must be in [0, 1)");
}

TokenBucket::TokenBucket(double bytes_per_second, double burst_bytes)
    : rate_(bytes_per_second), burst_(burst_bytes), tokens_(burst_bytes), last_(Clock::now()) {}

void TokenBucket::acquire(std::size_t bytes) {
  double wait;
  {
    std::lock_guard lock(mu_);
    const auto now = Clock::now();
    tokens_ = std::min(burst_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
    last_ = now;
    tokens_ -= static_cast<double>(bytes);
    wait = tokens_ < 0 ? -tokens_ / rate_ : 0.0;
  }
  if (wait > 0) std::this_thread::sleep_for(std::chrono::duration<double>(wait));
}

std::vector<std::string> flood_bodies(const FloodConfig& cfg, int connection, std::size_t count) {
  std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(connection)};
  std::mt19937_64 rng(seq);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) {
    wire::DataRecord r{static_cast<std::uint32_t>(i % cfg.streams + 1), 1380028338000 + i, 0.5 * double(i), 0};
    auto body = wire::encode_request(r);
    // {"type":"d","parameter":{...}} -> {"type":"d","parameter":{...},"pad":"..."}
    body.pop_back();
    body += ",\"pad\":\"" + filler(rng, cfg.payload_bytes) + "\"}";
    out.push_back(std::move(body));
  }
  return out;
}

FloodReport run_flood(const FloodConfig& cfg, const net::Endpoint& target, std::function<std::uint64_t()> accepted) {
  cfg.validate();
  FloodReport report;
  if (cfg.duration == 0) return report;

  const std::size_t ring = std::clamp<std::size_t>((4u << 20) / (cfg.payload_bytes + 128), 4, 64);
  std::vector<std::vector<std::string>> frames(cfg.connections);
  std::vector<IngestClient> clients;
  std::size_t frame_bytes = 0;
  try {
    for (int c = 0; c < cfg.connections; ++c) {
      for (auto& body : flood_bodies(cfg, c, ring)) frames[c].push_back(wire::write_frame(body, cfg.encoding));
      for (const auto& f : frames[c]) frame_bytes += f.size();
      auto client = IngestClient::connect(target, cfg.encoding);
      for (std::uint32_t s = 1; s <= cfg.streams; ++s)
        client.send(wire::StreamDefinition{s, "flood::c" + std::to_string(c) + "/s" + std::to_string(s),
                                           ValueKind::Float, cfg.encoding});
      client.flush();
      clients.push_back(std::move(client));
    }
  } catch (const Error& e) {
    report.error = e.what();
    return report;
  }
  report.frame_bytes = static_cast<double>(frame_bytes) / static_cast<double>(ring * cfg.connections);

  std::optional<TokenBucket> bucket;
  if (cfg.bandwidth_bps > 0) bucket.emplace(cfg.bandwidth_bps / 8.0, std::max<double>(kChunk, cfg.bandwidth_bps / 8.0 / 100));

  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> sent{0}, bytes{0};
  std::mutex err_mu;
  std::vector<std::thread> threads;
  for (int c = 0; c < cfg.connections; ++c) {
    threads.emplace_back([&, c] {
      auto& client = clients[c];
      client.set_flush_threshold(~std::size_t{0});
      const auto& ring_frames = frames[c];
      std::size_t next = 0;
      try {
        while (!stop) {
          std::size_t chunk = 0, n = 0;
          while (chunk < kChunk) {
            const auto& f = ring_frames[next++ % ring_frames.size()];
            client.raw(f);
            chunk += f.size();
            ++n;
          }
          if (bucket) bucket->acquire(chunk);
          client.flush();
          sent += n;
          bytes += chunk;
        }
        client.finish();
      } catch (const Error& e) {
        std::lock_guard lock(err_mu);
        if (report.error.empty()) report.error = e.what();
      }
    });
  }

  auto count = [&] { return accepted ? accepted() : sent.load(); };
  const auto start = Clock::now();
  std::this_thread::sleep_until(start + std::chrono::duration<double>(cfg.duration * cfg.warmup_fraction));
  const auto c0 = count();
  const auto b0 = bytes.load();
  const auto t0 = Clock::now();
  std::this_thread::sleep_until(start + std::chrono::duration<double>(cfg.duration));
  const auto c1 = count();
  const auto b1 = bytes.load();
  const auto t1 = Clock::now();
  stop = true;
  for (auto& t : threads) t.join();

  report.records = c1 - c0;
  report.wire_bytes = b1 - b0;
  report.seconds = std::chrono::duration<double>(t1 - t0).count();
  if (report.seconds > 0) {
    report.records_per_second = static_cast<double>(report.records) / report.seconds;
    report.payload_bytes_per_second = report.records_per_second * static_cast<double>(cfg.payload_bytes);
  }
  return report;
}

}  // namespace rtdap::sim
