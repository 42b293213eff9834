#pragma once

#include <span>
#include <vector>

namespace envirollm {

struct MetricsSnapshot;

/// Coefficients of the utilization-scaled power model. The defaults are
/// rough desktop estimates, not measurements.
class PowerConfig {
 public:
  static constexpr double kDefaultBaselineWatts = 15.0;
  static constexpr double kDefaultCpuMaxWatts = 65.0;
  static constexpr double kDefaultGpuMaxWatts = 220.0;

  PowerConfig() = default;
  /// Throws std::invalid_argument unless baseline >= 0 and both maxima > 0.
  PowerConfig(double baseline_watts, double cpu_max_watts, double gpu_max_watts);

  double baseline_watts() const noexcept { return baseline_watts_; }
  double cpu_max_watts() const noexcept { return cpu_max_watts_; }
  double gpu_max_watts() const noexcept { return gpu_max_watts_; }

 private:
  double baseline_watts_ = kDefaultBaselineWatts;
  double cpu_max_watts_ = kDefaultCpuMaxWatts;
  double gpu_max_watts_ = kDefaultGpuMaxWatts;
};

struct PowerPoint {
  double t = 0.0;  // monotonic seconds
  double watts = 0.0;
};

struct PowerSeries {
  std::vector<PowerPoint> points;
};

struct EnergyReading {
  double energy_wh = 0.0;
  double duration_s = 0.0;
  double mean_watts = 0.0;
};

struct WindowEnergy {
  EnergyReading reading;
  /// Set when no snapshot overlaps the requested window.
  bool empty_window = false;
};

/// Fraction of total CPU capacity used by the sampled targets, in [0, 1].
double cpu_fraction(const MetricsSnapshot& snapshot);

/// Instantaneous platform power. With a measured GPU board power the CPU
/// share is still estimated and added on top of the baseline; otherwise the
/// GPU share is scaled from utilization.
double estimate_power(const MetricsSnapshot& snapshot, const PowerConfig& config);

/// Trapezoidal integration. Throws NonMonotonicSeries when timestamps are
/// not strictly increasing and std::invalid_argument on negative power.
EnergyReading integrate_energy(const PowerSeries& series);

/// Estimates power per snapshot, clips the series to [t_start, t_end] with
/// linear interpolation at the edges and integrates.
/// Throws std::invalid_argument when t_start > t_end.
WindowEnergy energy_for_window(std::span<const MetricsSnapshot> snapshots, double t_start,
                               double t_end, const PowerConfig& config);

/// Clips a power series to [t_start, t_end]; empty when they do not overlap.
PowerSeries clip_series(const PowerSeries& series, double t_start, double t_end);

}  // namespace envirollm
