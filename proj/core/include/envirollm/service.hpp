#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "envirollm/advisor.hpp"
#include "envirollm/bench.hpp"
#include "envirollm/engine.hpp"
#include "envirollm/live_feed.hpp"

namespace envirollm {

class Clock;
class ResultStore;
class TelemetryProvider;

enum class JobState { Pending, Running, Done, Failed };

std::string_view to_string(JobState state);

struct BenchmarkJob {
  std::string job_id;
  JobState state = JobState::Pending;
  std::size_t completed_pairs = 0;
  std::size_t total_pairs = 0;
  std::vector<std::int64_t> results_so_far;
  std::vector<PairFailure> failures;
  std::optional<std::string> error;
};

struct JobRequest {
  ApiPlatform platform = ApiPlatform::Ollama;
  std::string base_url;
  std::vector<std::string> models;
  std::vector<PromptSpec> prompts;
};

struct JobConflict {
  std::string running_job_id;
};

/// Runs at most one benchmark job at a time on a background worker and
/// persists every result through the store.
class JobManager {
 public:
  JobManager(ResultStore& store, TelemetryProvider& provider, Clock& clock,
             BenchmarkConfig config);
  ~JobManager();

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  /// A new job id, or the id of the job that is still active.
  /// Throws std::invalid_argument on an empty model or prompt list.
  std::variant<std::string, JobConflict> submit(JobRequest request);

  std::optional<BenchmarkJob> get(const std::string& job_id) const;

  /// Cancels the active job (marked Failed) and joins the worker.
  void shutdown();

 private:
  void execute(const std::string& job_id, JobRequest request, std::stop_token stop);
  void update(const std::string& job_id, const std::function<void(BenchmarkJob&)>& fn);

  ResultStore& store_;
  TelemetryProvider& provider_;
  Clock& clock_;
  BenchmarkConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, BenchmarkJob> jobs_;
  std::optional<std::string> active_;
  std::uint64_t next_id_ = 1;
  std::jthread worker_;
};

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8090;  // 0 picks a free port
  double monitor_interval_s = 2.0;
  std::size_t feed_capacity = LiveFeed::kDefaultCapacity;
  bool run_monitor = true;
  BenchmarkConfig bench;
  AdvisorTable advisor;
  std::string static_dir;  // served at / when set
};

/// HTTP API over the store, the live monitor, the benchmark worker and the
/// advisor.
///
///   GET    /api/health
///   GET    /api/metrics/live            text/event-stream
///   GET    /api/hardware
///   GET    /api/recommendations
///   GET    /api/benchmarks?model=&platform=&since=&until=
///   POST   /api/benchmarks              202 {job_id} | 409
///   GET    /api/benchmarks/jobs/{id}
///   GET    /api/export.csv
///   DELETE /api/benchmarks?scope=all|model:NAME|before:TIMESTAMP
class Service {
 public:
  Service(ResultStore& store, TelemetryProvider& provider, Clock& clock, ServiceOptions options);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts serving on background threads. Throws BindFailure.
  void start();
  /// Bound port, valid after start().
  int port() const noexcept;
  /// Stops the monitor, cancels the active job and closes the listener.
  void stop();

  LiveFeed& feed() noexcept;
  JobManager& jobs() noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace envirollm
