#include "envirollm/sampler.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "envirollm/clock.hpp"
#include "envirollm/errors.hpp"

namespace envirollm {
namespace {

struct MatchToken {
  std::string_view token;
  LlmPlatform platform;
};

constexpr std::array<MatchToken, 10> kMatchTable{{
    {"ollama", LlmPlatform::Ollama},
    {"lm studio", LlmPlatform::LMStudio},
    {"lmstudio", LlmPlatform::LMStudio},
    {"llama-server", LlmPlatform::LlamaCpp},
    {"llama.cpp", LlmPlatform::LlamaCpp},
    {"llama-cpp", LlmPlatform::LlamaCpp},
    {"text-generation", LlmPlatform::TextGenWebUI},
    {"textgen", LlmPlatform::TextGenWebUI},
    {"koboldcpp", LlmPlatform::KoboldCpp},
    {"vllm", LlmPlatform::VLLM},
}};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string basename_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

// Interpreter-hosted runtimes (vLLM, text-generation-webui) show up as
// "python"; look at the script or module they run instead.
LlmPlatform classify_command(const std::string& command) {
  std::istringstream in(command);
  std::vector<std::string> argv;
  for (std::string a; argv.size() < 3 && in >> a;) {
    argv.push_back(a);
  }
  if (argv.empty()) {
    return LlmPlatform::Unknown;
  }
  const auto exe = basename_of(argv[0]);
  if (auto p = classify_process_name(exe); p != LlmPlatform::Unknown) {
    return p;
  }
  if (lower(exe).rfind("python", 0) == 0 && argv.size() >= 2) {
    const auto& target = (argv[1] == "-m" && argv.size() >= 3) ? argv[2] : argv[1];
    return classify_process_name(basename_of(target));
  }
  return LlmPlatform::Unknown;
}

}  // namespace

std::string_view to_string(LlmPlatform platform) {
  switch (platform) {
    case LlmPlatform::Ollama: return "Ollama";
    case LlmPlatform::LMStudio: return "LMStudio";
    case LlmPlatform::LlamaCpp: return "LlamaCpp";
    case LlmPlatform::TextGenWebUI: return "TextGenWebUI";
    case LlmPlatform::KoboldCpp: return "KoboldCpp";
    case LlmPlatform::VLLM: return "VLLM";
    case LlmPlatform::Unknown: break;
  }
  return "Unknown";
}

LlmPlatform classify_process_name(std::string_view name) {
  const auto haystack = lower(name);
  for (const auto& m : kMatchTable) {
    if (haystack.find(m.token) != std::string::npos) {
      return m.platform;
    }
  }
  return LlmPlatform::Unknown;
}

std::vector<ProcessHandle> detect_llm_processes(TelemetryProvider& provider) {
  std::vector<ProcessHandle> found;
  for (const auto& p : provider.list_processes()) {
    if (p.pid <= 0) {
      continue;
    }
    auto platform = classify_process_name(p.name);
    if (platform == LlmPlatform::Unknown && !p.command.empty()) {
      platform = classify_command(p.command);
    }
    if (platform != LlmPlatform::Unknown) {
      found.push_back({p.pid, p.name, platform});
    }
  }
  std::sort(found.begin(), found.end(),
            [](const ProcessHandle& a, const ProcessHandle& b) { return a.pid < b.pid; });
  return found;
}

double MetricsSnapshot::total_cpu_percent() const {
  return std::accumulate(per_process.begin(), per_process.end(), 0.0,
                         [](double acc, const ProcessSample& s) { return acc + s.cpu_percent; });
}

MetricsSnapshot sample_metrics(TelemetryProvider& provider, const Clock& clock,
                               std::span<const ProcessHandle> targets) {
  MetricsSnapshot snap;
  snap.monotonic_s = clock.now();
  snap.wall_time = clock.wall_time_iso();
  snap.logical_cores = std::max(1u, provider.logical_cores());

  for (const auto& target : targets) {
    std::optional<ProcessUsage> usage;
    try {
      usage = provider.read_process(target.pid);
    } catch (const std::exception& e) {
      snap.warnings.push_back("dropped " + target.name + " (pid " + std::to_string(target.pid) +
                              "): " + e.what());
      continue;
    }
    if (!usage) {
      snap.warnings.push_back("dropped " + target.name + " (pid " + std::to_string(target.pid) +
                              "): process exited");
      continue;
    }
    snap.per_process.push_back({target.pid, target.name, target.platform,
                                std::max(0.0, usage->cpu_percent), usage->rss_bytes});
  }

  std::optional<GpuTelemetry> gpu;
  try {
    gpu = provider.read_gpu();
  } catch (const std::exception& e) {
    snap.warnings.push_back(std::string("gpu telemetry unreadable: ") + e.what());
  }
  if (gpu) {
    const bool sane = gpu->utilization_percent >= 0 && gpu->temperature_celsius >= 0 &&
                      gpu->memory_used_bytes <= gpu->memory_total_bytes &&
                      (!gpu->power_watts || *gpu->power_watts > 0);
    if (sane) {
      snap.gpu = GpuSample{gpu->utilization_percent, gpu->memory_used_bytes,
                           gpu->memory_total_bytes, gpu->temperature_celsius, gpu->power_watts};
    } else {
      snap.warnings.push_back("gpu telemetry discarded: inconsistent reading");
    }
  }
  return snap;
}

MonitorSummary run_monitor(TelemetryProvider& provider, Clock& clock, const MonitorOptions& options,
                           const SnapshotSink& sink, std::stop_token stop) {
  if (!(options.interval_s > 0.0)) {
    throw std::invalid_argument("monitor interval must be positive");
  }
  const std::size_t redetect = std::max<std::size_t>(1, options.redetect_every);

  MonitorSummary summary;
  summary.started_monotonic_s = clock.now();
  summary.started_at = clock.wall_time_iso();
  const double origin = summary.started_monotonic_s;

  auto finish = [&] {
    summary.stopped_monotonic_s = clock.now();
    summary.stopped_at = clock.wall_time_iso();
    return summary;
  };

  if (stop.stop_requested()) {
    return finish();
  }

  auto targets = detect_llm_processes(provider);
  for (std::size_t tick = 0;; ++tick) {
    if (tick > 0 && tick % redetect == 0) {
      try {
        targets = detect_llm_processes(provider);
      } catch (const ProcessEnumerationDenied&) {
        // keep the previous target list
      }
    }
    sink(sample_metrics(provider, clock, targets));
    ++summary.samples_emitted;
    if (options.max_samples && summary.samples_emitted >= *options.max_samples) {
      break;
    }
    const double deadline = origin + static_cast<double>(tick + 1) * options.interval_s;
    if (!clock.sleep_until(deadline, stop)) {
      break;
    }
  }
  return finish();
}

BackgroundMonitor::BackgroundMonitor(TelemetryProvider& provider, Clock& clock,
                                     MonitorOptions options, SnapshotSink sink)
    : thread_([this, &provider, &clock, options, sink = std::move(sink)](std::stop_token stop) {
        try {
          summary_ = run_monitor(provider, clock, options, sink, stop);
        } catch (...) {
          error_ = std::current_exception();
        }
      }) {}

BackgroundMonitor::~BackgroundMonitor() {
  thread_.request_stop();
  if (thread_.joinable()) {
    thread_.join();
  }
}

void BackgroundMonitor::request_stop() { thread_.request_stop(); }

MonitorSummary BackgroundMonitor::join() {
  thread_.request_stop();
  if (thread_.joinable()) {
    thread_.join();
  }
  if (error_) {
    std::rethrow_exception(std::exchange(error_, nullptr));
  }
  return summary_;
}

}  // namespace envirollm
