#include "envirollm/engine.hpp"

#include <algorithm>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>

#include "envirollm/clients.hpp"
#include "envirollm/clock.hpp"
#include "envirollm/errors.hpp"
#include "envirollm/sampler.hpp"
#include "envirollm/store.hpp"

namespace envirollm {
namespace {

// Empty process table when listing is denied; GPU and memory pass through.
class SystemOnlyFallback final : public TelemetryProvider {
 public:
  explicit SystemOnlyFallback(TelemetryProvider& inner) : inner_(inner) {}

  std::vector<ProcessInfo> list_processes() override {
    try {
      return inner_.list_processes();
    } catch (const ProcessEnumerationDenied&) {
      return {};
    }
  }
  std::optional<ProcessUsage> read_process(int pid) override { return inner_.read_process(pid); }
  std::optional<GpuTelemetry> read_gpu() override { return inner_.read_gpu(); }
  MemoryInfo read_memory() override { return inner_.read_memory(); }
  unsigned logical_cores() override { return inner_.logical_cores(); }

 private:
  TelemetryProvider& inner_;
};

// Collects snapshots on a background thread for the duration of one pair.
class PairSampler {
 public:
  PairSampler(TelemetryProvider& provider, Clock& clock, double interval_s)
      : monitor_(provider, clock, MonitorOptions{interval_s, 5, std::nullopt},
                 [this](const MetricsSnapshot& s) {
                   std::lock_guard lock(mutex_);
                   snapshots_.push_back(s);
                   cv_.notify_all();
                 }) {}

  /// Waits for a snapshot taken at or after `t`. Returns false when the
  /// monitor does not deliver one within `limit_s` of real time.
  bool wait_for_sample_at(double t, double limit_s) {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, std::chrono::duration<double>(limit_s), [&] {
      return !snapshots_.empty() && snapshots_.back().monotonic_s >= t;
    });
  }

  bool wait_for_first(double limit_s) {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, std::chrono::duration<double>(limit_s),
                        [&] { return !snapshots_.empty(); });
  }

  std::vector<MetricsSnapshot> finish() {
    monitor_.join();
    std::lock_guard lock(mutex_);
    return std::move(snapshots_);
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<MetricsSnapshot> snapshots_;
  BackgroundMonitor monitor_;
};

struct Measured {
  Completion completion;
  std::string timestamp;
  double wall_s = 0.0;
  double energy_wh = 0.0;
};

template <typename Request>
Measured measure(TelemetryProvider& provider, Clock& clock, const BenchmarkConfig& config,
                 Request&& request) {
  SystemOnlyFallback fallback(provider);
  PairSampler sampler(fallback, clock, config.sample_interval_s);
  const double grace = config.sample_interval_s * 4 + 5.0;
  sampler.wait_for_first(grace);

  Measured m;
  m.timestamp = clock.wall_time_iso();
  const double t_start = clock.now();
  try {
    m.completion = request();
  } catch (...) {
    sampler.finish();
    throw;
  }
  const double t_end = clock.now();
  // Keep sampling until a snapshot closes the window.
  sampler.wait_for_sample_at(t_end, grace);
  const auto snapshots = sampler.finish();

  m.wall_s = t_end - t_start;
  const auto window = energy_for_window(snapshots, t_start, t_end, config.power);
  m.energy_wh = window.reading.energy_wh;
  return m;
}

FailureKind classify(const std::exception_ptr& error, std::string& message) {
  try {
    std::rethrow_exception(error);
  } catch (const ModelNotFound& e) {
    message = e.what();
    return FailureKind::ModelNotFound;
  } catch (const InferenceTimeout& e) {
    message = e.what();
    return FailureKind::InferenceTimeout;
  } catch (const MalformedResponse& e) {
    message = e.what();
    return FailureKind::MalformedResponse;
  } catch (const std::exception& e) {
    message = e.what();
    return FailureKind::Other;
  }
}

void check_inputs(std::size_t models, std::size_t prompts) {
  if (models == 0) {
    throw std::invalid_argument("at least one model is required");
  }
  if (prompts == 0) {
    throw std::invalid_argument("at least one prompt is required");
  }
}

// Shared sweep loop; `run_pair` performs the request for one pair.
template <typename RunPair, typename Metadata>
SweepOutcome sweep(std::span<const std::string> models, std::span<const PromptSpec> prompts,
                   ApiPlatform platform, const std::string& endpoint_url,
                   TelemetryProvider& provider, Clock& clock, const BenchmarkConfig& config,
                   const SweepObserver& observer, std::stop_token stop, RunPair&& run_pair,
                   Metadata&& metadata) {
  SweepOutcome outcome;
  const std::size_t total = models.size() * prompts.size();
  std::size_t completed = 0;
  std::map<std::string, QuantLabel> quant_cache;
  bool judge_available = config.judge.enabled;

  for (const auto& model : models) {
    for (const auto& prompt : prompts) {
      if (stop.stop_requested()) {
        return outcome;
      }
      try {
        auto m = measure(provider, clock, config, [&] { return run_pair(model, prompt); });

        BenchmarkResult r;
        r.timestamp = m.timestamp;
        r.platform = platform;
        r.endpoint_url = endpoint_url;
        r.model = model;
        r.prompt_text = prompt.text;
        r.prompt_hash = prompt_hash(prompt.text);
        r.response_text = m.completion.text;
        r.duration_total_s = m.wall_s;
        r.duration_s = m.completion.generation_s.value_or(m.wall_s);
        if (!(r.duration_s > 0.0)) {
          r.duration_s = std::max(m.wall_s, 1e-6);
        }
        if (m.completion.tokens) {
          r.tokens = *m.completion.tokens;
        } else {
          r.tokens = estimate_tokens(r.response_text);
          r.tokens_estimated = true;
        }
        r.energy_wh = m.energy_wh;
        const auto derived = derive_metrics(r.energy_wh, r.tokens, r.duration_s);
        r.tokens_per_s = derived.tokens_per_s;
        r.wh_per_token = derived.wh_per_token;

        auto cached = quant_cache.find(model);
        if (cached == quant_cache.end()) {
          auto label = detect_quantization(model);
          if (label.raw.empty()) {
            if (auto meta = metadata(model)) {
              label = detect_quantization(model, *meta);
            }
          }
          cached = quant_cache.emplace(model, label).first;
        }
        r.quantization = cached->second;

        // Judging happens after the energy window has closed.
        std::optional<QualityScore> score;
        if (judge_available) {
          try {
            score = judge_score(prompt.text, r.response_text, config.judge);
          } catch (const JudgeUnavailable&) {
            judge_available = false;
          } catch (const UnparseableJudgeReply&) {
          }
        }
        r.quality = score ? *score : heuristic_score(prompt.text, r.response_text, config.heuristic);

        validate(r);
        if (observer.on_result) {
          observer.on_result(r);
        }
        outcome.results.push_back(std::move(r));
      } catch (const std::exception&) {
        PairFailure failure{model, prompt.id, FailureKind::Other, {}};
        failure.kind = classify(std::current_exception(), failure.message);
        if (observer.on_failure) {
          observer.on_failure(failure);
        }
        outcome.failures.push_back(std::move(failure));
      }
      ++completed;
      if (observer.on_progress) {
        observer.on_progress(completed, total);
      }
    }
  }
  return outcome;
}

}  // namespace

std::string_view to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::ModelNotFound: return "model-not-found";
    case FailureKind::InferenceTimeout: return "inference-timeout";
    case FailureKind::MalformedResponse: return "malformed-response";
    case FailureKind::Other: break;
  }
  return "error";
}

BenchmarkEngine::BenchmarkEngine(TelemetryProvider& provider, Clock& clock, BenchmarkConfig config)
    : provider_(provider), clock_(clock), config_(std::move(config)) {
  if (!(config_.sample_interval_s > 0.0)) {
    throw std::invalid_argument("sample interval must be positive");
  }
  if (!(config_.timeout_s > 0.0)) {
    throw std::invalid_argument("timeout must be positive");
  }
}

SweepOutcome BenchmarkEngine::run_ollama(std::span<const std::string> models,
                                         std::span<const PromptSpec> prompts,
                                         const std::string& base_url,
                                         const SweepObserver& observer, std::stop_token stop) {
  check_inputs(models.size(), prompts.size());
  ClientOptions options;
  options.timeout_s = config_.timeout_s;
  options.stream = config_.stream;
  const OllamaClient client(base_url, options);
  client.ping();
  return sweep(
      models, prompts, ApiPlatform::Ollama, base_url, provider_, clock_, config_, observer, stop,
      [&](const std::string& model, const PromptSpec& prompt) {
        return client.generate(model, prompt.text);
      },
      [&](const std::string& model) { return client.model_metadata(model); });
}

SweepOutcome BenchmarkEngine::run_openai(const std::string& base_url, const std::string& model,
                                         std::span<const PromptSpec> prompts,
                                         const SweepObserver& observer, std::stop_token stop) {
  check_inputs(model.empty() ? 0 : 1, prompts.size());
  ClientOptions options;
  options.timeout_s = config_.timeout_s;
  options.stream = config_.stream;
  const OpenAiClient client(base_url, options, config_.api_key);
  client.ping();
  const std::vector<std::string> models{model};
  return sweep(
      models, prompts, ApiPlatform::OpenAICompatible, base_url, provider_, clock_, config_,
      observer, stop,
      [&](const std::string& m, const PromptSpec& prompt) { return client.chat(m, prompt.text); },
      [&](const std::string& m) { return client.model_metadata(m); });
}

}  // namespace envirollm
