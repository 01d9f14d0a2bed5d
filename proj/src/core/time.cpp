#include <chrono>

#include "rtdap/core/time.hpp"

namespace rtdap {

Timestamp wall_clock_ms() noexcept {
  using namespace std::chrono;
  return static_cast<Timestamp>(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

}  // namespace rtdap
