#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace envirollm {

class Clock;

struct ProcessInfo {
  int pid = 0;
  std::string name;
  std::string command;  // full command line when available
};

struct ProcessUsage {
  double cpu_percent = 0.0;  // raw, may exceed 100 on multicore hosts
  std::uint64_t rss_bytes = 0;
};

struct GpuTelemetry {
  std::string name;
  double utilization_percent = 0.0;
  std::uint64_t memory_used_bytes = 0;
  std::uint64_t memory_total_bytes = 0;
  double temperature_celsius = 0.0;
  std::optional<double> power_watts;
};

struct MemoryInfo {
  std::uint64_t total_bytes = 0;
  std::uint64_t available_bytes = 0;
};

/// Source of process and device readings. Implementations must be safe to
/// call from several threads (the live monitor and a benchmark sampler may
/// share one provider).
class TelemetryProvider {
 public:
  virtual ~TelemetryProvider() = default;

  /// Throws ProcessEnumerationDenied when the process table is unreadable.
  virtual std::vector<ProcessInfo> list_processes() = 0;
  /// nullopt when the process no longer exists or cannot be read.
  virtual std::optional<ProcessUsage> read_process(int pid) = 0;
  /// nullopt when no GPU telemetry is readable.
  virtual std::optional<GpuTelemetry> read_gpu() = 0;
  virtual MemoryInfo read_memory() = 0;
  virtual unsigned logical_cores() = 0;
};

/// Linux implementation: /proc for processes and memory, nvidia-smi for
/// NVIDIA board telemetry when it is on PATH.
class SystemTelemetryProvider final : public TelemetryProvider {
 public:
  explicit SystemTelemetryProvider(std::string proc_root = "/proc");

  std::vector<ProcessInfo> list_processes() override;
  std::optional<ProcessUsage> read_process(int pid) override;
  std::optional<GpuTelemetry> read_gpu() override;
  MemoryInfo read_memory() override;
  unsigned logical_cores() override;

 private:
  struct CpuTicks {
    std::uint64_t process_ticks = 0;
    double wall_seconds = 0.0;
  };

  std::string proc_root_;
  std::optional<std::string> nvidia_smi_;
  std::mutex mutex_;
  std::unordered_map<int, CpuTicks> previous_;
};

/// One line of a mock telemetry script:
///   t_seconds cpu_percent rss_bytes gpu_util gpu_power_watts
/// A row becomes active at `t_seconds` after the provider's start time and
/// stays active until the next row. `gpu_power_watts` of "-" means the
/// device reports no power reading.
struct MockSample {
  double t = 0.0;
  double cpu_percent = 0.0;
  std::uint64_t rss_bytes = 0;
  double gpu_util = 0.0;
  std::optional<double> gpu_power_watts;
};

/// Parses the mock script format. Blank lines and lines starting with '#'
/// are ignored. Throws std::invalid_argument on malformed rows or rows that
/// are not ordered by time.
std::vector<MockSample> parse_mock_script(std::string_view text);

/// Scripted provider for tests and demos.
class MockTelemetryProvider final : public TelemetryProvider {
 public:
  struct Options {
    std::vector<ProcessInfo> processes;
    std::vector<MockSample> script;
    bool has_gpu = true;
    std::string gpu_name = "Mock GPU";
    std::uint64_t gpu_memory_total_bytes = 10'000'000'000ULL;
    std::uint64_t gpu_memory_used_bytes = 2'000'000'000ULL;
    double gpu_temperature_celsius = 55.0;
    MemoryInfo memory{32'000'000'000ULL, 24'000'000'000ULL};
    unsigned cores = 8;
    bool deny_enumeration = false;
  };

  MockTelemetryProvider(const Clock& clock, Options options);

  std::vector<ProcessInfo> list_processes() override;
  std::optional<ProcessUsage> read_process(int pid) override;
  std::optional<GpuTelemetry> read_gpu() override;
  MemoryInfo read_memory() override;
  unsigned logical_cores() override;

  /// Marks a process as exited; it disappears from the table and reads fail.
  void kill(int pid);
  void add_process(ProcessInfo process);
  void set_memory(MemoryInfo memory);

 private:
  const MockSample& active_row() const;

  const Clock& clock_;
  double start_;
  mutable std::mutex mutex_;
  Options options_;
  std::set<int> dead_;
};

}  // namespace envirollm
