#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "envirollm/telemetry.hpp"

namespace envirollm {

class Clock;

enum class LlmPlatform { Ollama, LMStudio, LlamaCpp, TextGenWebUI, KoboldCpp, VLLM, Unknown };

std::string_view to_string(LlmPlatform platform);

/// Maps a process name onto a local inference platform using
/// case-insensitive substring tokens. Returns Unknown when nothing matches.
LlmPlatform classify_process_name(std::string_view name);

struct ProcessHandle {
  int pid = 0;
  std::string name;
  LlmPlatform platform = LlmPlatform::Unknown;

  bool operator==(const ProcessHandle&) const = default;
};

/// Every running process whose name matches a known inference runtime,
/// ordered by pid. Throws ProcessEnumerationDenied.
std::vector<ProcessHandle> detect_llm_processes(TelemetryProvider& provider);

struct ProcessSample {
  int pid = 0;
  std::string name;
  LlmPlatform platform = LlmPlatform::Unknown;
  double cpu_percent = 0.0;
  std::uint64_t rss_bytes = 0;
};

struct GpuSample {
  double utilization_percent = 0.0;
  std::uint64_t memory_used_bytes = 0;
  std::uint64_t memory_total_bytes = 0;
  double temperature_celsius = 0.0;
  std::optional<double> power_watts;
};

struct MetricsSnapshot {
  double monotonic_s = 0.0;
  std::string wall_time;
  unsigned logical_cores = 1;
  std::vector<ProcessSample> per_process;
  std::optional<GpuSample> gpu;
  /// One entry per target dropped from this snapshot.
  std::vector<std::string> warnings;

  double total_cpu_percent() const;
};

/// Samples each target once plus system GPU telemetry. Targets that have
/// exited are dropped with a warning; GPU readings that break the snapshot
/// invariants are discarded.
MetricsSnapshot sample_metrics(TelemetryProvider& provider, const Clock& clock,
                               std::span<const ProcessHandle> targets);

struct MonitorOptions {
  double interval_s = 2.0;
  /// Process detection is repeated every this many intervals.
  std::size_t redetect_every = 5;
  /// Stop after this many samples (unbounded when empty).
  std::optional<std::size_t> max_samples;
};

struct MonitorSummary {
  std::size_t samples_emitted = 0;
  std::string started_at;
  std::string stopped_at;
  double started_monotonic_s = 0.0;
  double stopped_monotonic_s = 0.0;
};

using SnapshotSink = std::function<void(const MetricsSnapshot&)>;

/// Emits a snapshot immediately and then every `interval_s` on a fixed
/// schedule until `stop` is requested or `max_samples` is reached.
/// Throws std::invalid_argument when interval_s <= 0. Exceptions from the
/// sink and from the initial detection propagate.
MonitorSummary run_monitor(TelemetryProvider& provider, Clock& clock, const MonitorOptions& options,
                           const SnapshotSink& sink, std::stop_token stop);

/// Runs run_monitor on its own thread. Sink calls are serialized.
class BackgroundMonitor {
 public:
  BackgroundMonitor(TelemetryProvider& provider, Clock& clock, MonitorOptions options,
                    SnapshotSink sink);
  ~BackgroundMonitor();

  BackgroundMonitor(const BackgroundMonitor&) = delete;
  BackgroundMonitor& operator=(const BackgroundMonitor&) = delete;

  void request_stop();
  /// Stops, joins and rethrows any exception raised on the monitor thread.
  MonitorSummary join();

 private:
  MonitorSummary summary_;
  std::exception_ptr error_;
  std::jthread thread_;
};

}  // namespace envirollm
