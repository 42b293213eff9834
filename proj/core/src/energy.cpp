#include "envirollm/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "envirollm/errors.hpp"
#include "envirollm/sampler.hpp"

namespace envirollm {
namespace {

constexpr double kSecondsPerHour = 3600.0;

double interpolate(const PowerPoint& a, const PowerPoint& b, double t) {
  const double span = b.t - a.t;
  if (span <= 0) {
    return a.watts;
  }
  return a.watts + (b.watts - a.watts) * ((t - a.t) / span);
}

}  // namespace

PowerConfig::PowerConfig(double baseline_watts, double cpu_max_watts, double gpu_max_watts)
    : baseline_watts_(baseline_watts), cpu_max_watts_(cpu_max_watts), gpu_max_watts_(gpu_max_watts) {
  if (!(baseline_watts >= 0.0) || !std::isfinite(baseline_watts)) {
    throw std::invalid_argument("baseline_watts must be >= 0");
  }
  if (!(cpu_max_watts > 0.0) || !std::isfinite(cpu_max_watts)) {
    throw std::invalid_argument("cpu_max_watts must be > 0");
  }
  if (!(gpu_max_watts > 0.0) || !std::isfinite(gpu_max_watts)) {
    throw std::invalid_argument("gpu_max_watts must be > 0");
  }
}

double cpu_fraction(const MetricsSnapshot& snapshot) {
  const double capacity = 100.0 * static_cast<double>(std::max(1u, snapshot.logical_cores));
  const double used = std::clamp(snapshot.total_cpu_percent(), 0.0, capacity);
  return used / capacity;
}

double estimate_power(const MetricsSnapshot& snapshot, const PowerConfig& config) {
  const double cpu_watts = cpu_fraction(snapshot) * config.cpu_max_watts();
  if (snapshot.gpu && snapshot.gpu->power_watts) {
    return *snapshot.gpu->power_watts + config.baseline_watts() + cpu_watts;
  }
  double gpu_frac = 0.0;
  if (snapshot.gpu) {
    gpu_frac = std::max(0.0, snapshot.gpu->utilization_percent) / 100.0;
  }
  return config.baseline_watts() + cpu_watts + gpu_frac * config.gpu_max_watts();
}

EnergyReading integrate_energy(const PowerSeries& series) {
  const auto& pts = series.points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!(pts[i].watts >= 0.0)) {
      throw std::invalid_argument("power series contains negative watts at index " +
                                  std::to_string(i));
    }
    if (i > 0 && !(pts[i].t > pts[i - 1].t)) {
      throw NonMonotonicSeries("power series timestamps not strictly increasing at index " +
                               std::to_string(i));
    }
  }
  EnergyReading reading;
  if (pts.size() < 2) {
    return reading;
  }
  double watt_seconds = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    watt_seconds += (pts[i].watts + pts[i + 1].watts) * 0.5 * (pts[i + 1].t - pts[i].t);
  }
  reading.duration_s = pts.back().t - pts.front().t;
  reading.energy_wh = watt_seconds / kSecondsPerHour;
  reading.mean_watts = reading.duration_s > 0 ? watt_seconds / reading.duration_s : 0.0;
  return reading;
}

PowerSeries clip_series(const PowerSeries& series, double t_start, double t_end) {
  const auto& pts = series.points;
  PowerSeries out;
  if (pts.empty() || t_end < pts.front().t || t_start > pts.back().t) {
    return out;
  }
  const double lo = std::max(t_start, pts.front().t);
  const double hi = std::min(t_end, pts.back().t);

  auto value_at = [&](double t) {
    auto it = std::lower_bound(pts.begin(), pts.end(), t,
                               [](const PowerPoint& p, double v) { return p.t < v; });
    if (it == pts.end()) {
      return pts.back().watts;
    }
    if (it->t == t || it == pts.begin()) {
      return it->watts;
    }
    return interpolate(*(it - 1), *it, t);
  };

  out.points.push_back({lo, value_at(lo)});
  for (const auto& p : pts) {
    if (p.t > lo && p.t < hi) {
      out.points.push_back(p);
    }
  }
  if (hi > lo) {
    out.points.push_back({hi, value_at(hi)});
  }
  return out;
}

WindowEnergy energy_for_window(std::span<const MetricsSnapshot> snapshots, double t_start,
                               double t_end, const PowerConfig& config) {
  if (t_start > t_end) {
    throw std::invalid_argument("window start is after window end");
  }
  PowerSeries series;
  series.points.reserve(snapshots.size());
  for (const auto& s : snapshots) {
    series.points.push_back({s.monotonic_s, estimate_power(s, config)});
  }
  WindowEnergy result;
  const auto clipped = clip_series(series, t_start, t_end);
  if (clipped.points.empty()) {
    result.empty_window = true;
    return result;
  }
  result.reading = integrate_energy(clipped);
  return result;
}

}  // namespace envirollm
