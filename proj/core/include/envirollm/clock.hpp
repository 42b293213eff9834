#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>

namespace envirollm {

/// Formats a UTC wall-clock time as ISO-8601 with milliseconds,
/// e.g. "2026-10-16T09:15:02.123Z".
std::string format_iso8601(std::chrono::system_clock::time_point tp);

/// Time source shared by the monitor, the benchmark engine and tests.
/// Monotonic time is expressed in seconds since an arbitrary origin.
class Clock {
 public:
  virtual ~Clock() = default;

  virtual double now() const = 0;
  virtual std::string wall_time_iso() const = 0;

  /// Blocks until monotonic time `deadline`. Returns false when `stop`
  /// was requested before the deadline was reached.
  virtual bool sleep_until(double deadline, std::stop_token stop) = 0;
};

class SteadyClock final : public Clock {
 public:
  SteadyClock();

  double now() const override;
  std::string wall_time_iso() const override;
  bool sleep_until(double deadline, std::stop_token stop) override;

 private:
  std::chrono::steady_clock::time_point origin_;
  std::mutex mutex_;
  std::condition_variable_any cv_;
};

/// Deterministic clock: sleeping advances time instantly. A cancellation
/// can be scheduled at a fixed fake time to model an external interrupt.
class FakeClock final : public Clock {
 public:
  explicit FakeClock(double start = 0.0,
                     std::chrono::system_clock::time_point wall_origin =
                         std::chrono::system_clock::time_point{});

  double now() const override;
  std::string wall_time_iso() const override;
  bool sleep_until(double deadline, std::stop_token stop) override;

  void advance(double seconds);
  void schedule_stop(double at, std::stop_source source);

 private:
  mutable std::mutex mutex_;
  double now_;
  std::chrono::system_clock::time_point wall_origin_;
  std::optional<double> stop_at_;
  std::stop_source stop_source_;
};

}  // namespace envirollm
