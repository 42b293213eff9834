#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include "envirollm/bench.hpp"
#include "envirollm/energy.hpp"
#include "envirollm/quality.hpp"

namespace envirollm {

class Clock;
class TelemetryProvider;

struct BenchmarkConfig {
  double sample_interval_s = 2.0;
  double timeout_s = 300.0;
  bool stream = false;
  PowerConfig power;
  JudgeSettings judge;
  HeuristicConfig heuristic;
  std::string api_key;  // OpenAI-compatible servers only
};

enum class FailureKind { ModelNotFound, InferenceTimeout, MalformedResponse, Other };

std::string_view to_string(FailureKind kind);

struct PairFailure {
  std::string model;
  std::string prompt_id;
  FailureKind kind = FailureKind::Other;
  std::string message;
};

struct SweepOutcome {
  std::vector<BenchmarkResult> results;
  std::vector<PairFailure> failures;
};

struct SweepObserver {
  /// Called for each finished result before it is added to the outcome;
  /// may assign the stored id.
  std::function<void(BenchmarkResult&)> on_result;
  std::function<void(const PairFailure&)> on_failure;
  std::function<void(std::size_t completed, std::size_t total)> on_progress;
};

/// Runs model x prompt pairs strictly one after another. For each pair it
/// samples telemetry during the request, integrates energy over the
/// request window, detects quantization and scores quality after the
/// window has closed. A failing pair is recorded and the sweep continues.
class BenchmarkEngine {
 public:
  BenchmarkEngine(TelemetryProvider& provider, Clock& clock, BenchmarkConfig config = {});

  /// Throws std::invalid_argument on empty models/prompts and
  /// EndpointUnreachable before running any pair.
  SweepOutcome run_ollama(std::span<const std::string> models, std::span<const PromptSpec> prompts,
                          const std::string& base_url, const SweepObserver& observer = {},
                          std::stop_token stop = {});

  /// Same contract via the OpenAI-compatible adapter.
  SweepOutcome run_openai(const std::string& base_url, const std::string& model,
                          std::span<const PromptSpec> prompts, const SweepObserver& observer = {},
                          std::stop_token stop = {});

  const BenchmarkConfig& config() const noexcept { return config_; }

 private:
  TelemetryProvider& provider_;
  Clock& clock_;
  BenchmarkConfig config_;
};

}  // namespace envirollm
