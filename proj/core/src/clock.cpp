#include "envirollm/clock.hpp"

#include <ctime>
#include <iomanip>
#include <sstream>

namespace envirollm {

std::string format_iso8601(std::chrono::system_clock::time_point tp) {
  using namespace std::chrono;
  const auto ms_total = duration_cast<milliseconds>(tp.time_since_epoch()).count();
  auto secs = static_cast<std::time_t>(ms_total / 1000);
  auto ms = ms_total % 1000;
  if (ms < 0) {
    ms += 1000;
    secs -= 1;
  }
  std::tm tm{};
  gmtime_r(&secs, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0')
      << ms << 'Z';
  return out.str();
}

SteadyClock::SteadyClock() : origin_(std::chrono::steady_clock::now()) {}

double SteadyClock::now() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
}

std::string SteadyClock::wall_time_iso() const {
  return format_iso8601(std::chrono::system_clock::now());
}

bool SteadyClock::sleep_until(double deadline, std::stop_token stop) {
  const auto target = origin_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(deadline));
  std::unique_lock lock(mutex_);
  cv_.wait_until(lock, stop, target, [] { return false; });
  return !stop.stop_requested();
}

FakeClock::FakeClock(double start, std::chrono::system_clock::time_point wall_origin)
    : now_(start), wall_origin_(wall_origin) {}

double FakeClock::now() const {
  std::lock_guard lock(mutex_);
  return now_;
}

std::string FakeClock::wall_time_iso() const {
  std::lock_guard lock(mutex_);
  return format_iso8601(wall_origin_ + std::chrono::duration_cast<std::chrono::milliseconds>(
                                           std::chrono::duration<double>(now_)));
}

bool FakeClock::sleep_until(double deadline, std::stop_token stop) {
  std::unique_lock lock(mutex_);
  if (stop.stop_requested()) {
    return false;
  }
  if (stop_at_ && *stop_at_ <= deadline) {
    if (*stop_at_ > now_) {
      now_ = *stop_at_;
    }
    stop_at_.reset();
    auto source = stop_source_;
    lock.unlock();
    source.request_stop();
    return false;
  }
  if (deadline > now_) {
    now_ = deadline;
  }
  return true;
}

void FakeClock::advance(double seconds) {
  std::lock_guard lock(mutex_);
  now_ += seconds;
}

void FakeClock::schedule_stop(double at, std::stop_source source) {
  std::lock_guard lock(mutex_);
  stop_at_ = at;
  stop_source_ = std::move(source);
}

}  // namespace envirollm
