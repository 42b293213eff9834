#include "envirollm/service.hpp"

#include <atomic>
#include <sstream>
#include <stdexcept>

#include <httplib.h>

#include "envirollm/clients.hpp"
#include "envirollm/clock.hpp"
#include "envirollm/energy.hpp"
#include "envirollm/errors.hpp"
#include "envirollm/json_io.hpp"
#include "envirollm/sampler.hpp"
#include "envirollm/store.hpp"
#include "envirollm/telemetry.hpp"

namespace envirollm {
namespace {

using json = nlohmann::json;

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply_json(res, status, json{{"error", message}});
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (req.has_param(name)) {
    auto v = req.get_param_value(name);
    if (!v.empty()) {
      return v;
    }
  }
  return std::nullopt;
}

JobRequest parse_job_request(const json& body) {
  JobRequest request;
  const auto platform = body.value("platform", std::string("ollama"));
  const auto parsed = parse_api_platform(platform);
  if (!parsed) {
    throw std::invalid_argument("unknown platform '" + platform + "'");
  }
  request.platform = *parsed;
  request.base_url = body.value("base_url", std::string());
  if (request.base_url.empty()) {
    request.base_url = request.platform == ApiPlatform::Ollama ? "http://localhost:11434"
                                                               : "http://localhost:1234/v1";
  }
  Endpoint::parse(request.base_url);
  if (!body.contains("models") || !body["models"].is_array() || body["models"].empty()) {
    throw std::invalid_argument("models must be a non-empty array");
  }
  for (const auto& m : body["models"]) {
    if (!m.is_string() || m.get<std::string>().empty()) {
      throw std::invalid_argument("model names must be non-empty strings");
    }
    request.models.push_back(m.get<std::string>());
  }
  if (request.platform == ApiPlatform::OpenAICompatible && request.models.size() != 1) {
    throw std::invalid_argument("openai-compatible jobs take exactly one model");
  }
  if (body.contains("prompt_ids")) {
    for (const auto& id : body["prompt_ids"]) {
      const auto preset = find_preset(id.is_string() ? id.get<std::string>() : std::string());
      if (!preset) {
        throw std::invalid_argument("unknown prompt id " + id.dump());
      }
      request.prompts.push_back(*preset);
    }
  }
  if (body.contains("custom_prompts")) {
    std::size_t n = 0;
    for (const auto& p : body["custom_prompts"]) {
      ++n;
      PromptSpec spec{"custom-" + std::to_string(n), PromptCategory::Custom, {}};
      if (p.is_string()) {
        spec.text = p.get<std::string>();
      } else if (p.is_object()) {
        spec.text = p.value("text", std::string());
        spec.id = p.value("id", spec.id);
        if (p.contains("category")) {
          spec.category = parse_prompt_category(p["category"].get<std::string>())
                              .value_or(PromptCategory::Custom);
        }
      }
      if (normalize_prompt(spec.text).empty()) {
        throw std::invalid_argument("custom prompts must not be empty");
      }
      request.prompts.push_back(std::move(spec));
    }
  }
  if (!body.contains("prompt_ids") && !body.contains("custom_prompts")) {
    request.prompts = preset_prompts();
  }
  if (request.prompts.empty()) {
    throw std::invalid_argument("no prompts selected");
  }
  return request;
}

std::optional<CleanScope> parse_scope(const std::string& scope) {
  if (scope == "all") {
    return CleanScope{CleanAll{}};
  }
  if (scope.rfind("model:", 0) == 0 && scope.size() > 6) {
    return CleanScope{CleanModel{scope.substr(6)}};
  }
  if (scope.rfind("before:", 0) == 0 && scope.size() > 7) {
    return CleanScope{CleanOlderThan{scope.substr(7)}};
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(JobState state) {
  switch (state) {
    case JobState::Pending: return "pending";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: break;
  }
  return "failed";
}

// ---- JobManager --------------------------------------------------------------

JobManager::JobManager(ResultStore& store, TelemetryProvider& provider, Clock& clock,
                       BenchmarkConfig config)
    : store_(store), provider_(provider), clock_(clock), config_(std::move(config)) {}

JobManager::~JobManager() { shutdown(); }

std::variant<std::string, JobConflict> JobManager::submit(JobRequest request) {
  if (request.models.empty() || request.prompts.empty()) {
    throw std::invalid_argument("a job needs at least one model and one prompt");
  }
  std::jthread previous;
  std::string job_id;
  {
    std::lock_guard lock(mutex_);
    if (active_) {
      const auto& job = jobs_.at(*active_);
      if (job.state == JobState::Pending || job.state == JobState::Running) {
        return JobConflict{*active_};
      }
    }
    job_id = "job-" + std::to_string(next_id_++);
    BenchmarkJob job;
    job.job_id = job_id;
    job.total_pairs = request.models.size() * request.prompts.size();
    jobs_.emplace(job_id, std::move(job));
    active_ = job_id;
    previous = std::move(worker_);
  }
  if (previous.joinable()) {
    previous.join();
  }
  std::lock_guard lock(mutex_);
  worker_ = std::jthread([this, job_id, request = std::move(request)](std::stop_token stop) mutable {
    execute(job_id, std::move(request), stop);
  });
  return job_id;
}

std::optional<BenchmarkJob> JobManager::get(const std::string& job_id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) {
    return std::nullopt;
  }
  return it->second;
}

void JobManager::shutdown() {
  std::jthread worker;
  {
    std::lock_guard lock(mutex_);
    worker = std::move(worker_);
  }
  if (worker.joinable()) {
    worker.request_stop();
    worker.join();
  }
}

void JobManager::update(const std::string& job_id, const std::function<void(BenchmarkJob&)>& fn) {
  std::lock_guard lock(mutex_);
  fn(jobs_.at(job_id));
}

void JobManager::execute(const std::string& job_id, JobRequest request, std::stop_token stop) {
  update(job_id, [](BenchmarkJob& j) { j.state = JobState::Running; });
  try {
    BenchmarkEngine engine(provider_, clock_, config_);
    SweepObserver observer;
    observer.on_result = [&](BenchmarkResult& r) {
      r.id = store_.save(r);
      update(job_id, [&](BenchmarkJob& j) { j.results_so_far.push_back(r.id); });
    };
    observer.on_failure = [&](const PairFailure& f) {
      update(job_id, [&](BenchmarkJob& j) { j.failures.push_back(f); });
    };
    observer.on_progress = [&](std::size_t done, std::size_t) {
      update(job_id, [&](BenchmarkJob& j) { j.completed_pairs = done; });
    };
    SweepOutcome outcome;
    if (request.platform == ApiPlatform::Ollama) {
      outcome = engine.run_ollama(request.models, request.prompts, request.base_url, observer, stop);
    } else {
      outcome = engine.run_openai(request.base_url, request.models.front(), request.prompts,
                                  observer, stop);
    }
    update(job_id, [&](BenchmarkJob& j) {
      if (j.completed_pairs < j.total_pairs && stop.stop_requested()) {
        j.state = JobState::Failed;
        j.error = "cancelled: service shutting down";
      } else if (outcome.results.empty()) {
        j.state = JobState::Failed;
        j.error = "all benchmark pairs failed";
      } else {
        j.state = JobState::Done;
      }
    });
  } catch (const std::exception& e) {
    update(job_id, [&](BenchmarkJob& j) {
      j.state = JobState::Failed;
      j.error = e.what();
    });
  }
}

// ---- Service -----------------------------------------------------------------

struct Service::Impl {
  Impl(ResultStore& s, TelemetryProvider& p, Clock& c, ServiceOptions o)
      : store(s),
        provider(p),
        clock(c),
        options(std::move(o)),
        feed(options.feed_capacity),
        jobs(s, p, c, options.bench) {}

  void routes();

  ResultStore& store;
  TelemetryProvider& provider;
  Clock& clock;
  ServiceOptions options;
  LiveFeed feed;
  JobManager jobs;
  httplib::Server server;
  std::thread listener;
  std::unique_ptr<BackgroundMonitor> monitor;
  std::atomic<bool> stopping{false};
  int port = 0;
};

void Service::Impl::routes() {
  server.set_keep_alive_timeout(1);
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });

  server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, json{{"status", "ok"}});
  });

  server.Get("/api/metrics/live", [this](const httplib::Request&, httplib::Response& res) {
    auto sub = feed.subscribe();
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [this, sub](size_t, httplib::DataSink& sink) {
          if (auto event = sub->next(std::chrono::milliseconds(200))) {
            const auto frame = "data: " + *event + "\n\n";
            return sink.write(frame.data(), frame.size());
          }
          if (sub->closed() || stopping.load()) {
            sink.done();
          }
          return true;
        },
        [this, sub](bool) { feed.unsubscribe(sub); });
  });

  server.Get("/api/hardware", [this](const httplib::Request&, httplib::Response& res) {
    try {
      reply_json(res, 200, json(detect_hardware(provider)));
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });

  server.Get("/api/recommendations", [this](const httplib::Request&, httplib::Response& res) {
    try {
      reply_json(res, 200, json(recommend(detect_hardware(provider), options.advisor)));
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });

  server.Get("/api/benchmarks", [this](const httplib::Request& req, httplib::Response& res) {
    ResultFilter filter;
    filter.model = param(req, "model");
    filter.since = param(req, "since");
    filter.until = param(req, "until");
    if (auto p = param(req, "platform")) {
      filter.platform = parse_api_platform(*p);
      if (!filter.platform) {
        reply_error(res, 400, "unknown platform '" + *p + "'");
        return;
      }
    }
    try {
      reply_json(res, 200, json(store.list_grouped(filter)));
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });

  server.Post("/api/benchmarks", [this](const httplib::Request& req, httplib::Response& res) {
    JobRequest request;
    try {
      request = parse_job_request(json::parse(req.body));
    } catch (const std::exception& e) {
      reply_error(res, 400, e.what());
      return;
    }
    auto submitted = jobs.submit(std::move(request));
    if (const auto* conflict = std::get_if<JobConflict>(&submitted)) {
      reply_json(res, 409, json{{"error", "a benchmark job is already running"},
                                {"job_id", conflict->running_job_id}});
      return;
    }
    reply_json(res, 202, json{{"job_id", std::get<std::string>(submitted)}});
  });

  server.Get(R"(/api/benchmarks/jobs/([A-Za-z0-9_-]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               if (auto job = jobs.get(req.matches[1])) {
                 reply_json(res, 200, json(*job));
               } else {
                 reply_error(res, 404, "unknown job");
               }
             });

  server.Get("/api/export.csv", [this](const httplib::Request&, httplib::Response& res) {
    try {
      std::ostringstream out;
      store.export_csv(out);
      res.set_header("Content-Disposition", "attachment; filename=\"benchmarks.csv\"");
      res.set_content(out.str(), "text/csv");
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });

  server.Delete("/api/benchmarks", [this](const httplib::Request& req, httplib::Response& res) {
    const auto scope = parse_scope(req.get_param_value("scope"));
    if (!scope) {
      reply_error(res, 400, "scope must be all, model:NAME or before:TIMESTAMP");
      return;
    }
    try {
      reply_json(res, 200, json{{"deleted", store.clean(*scope)}});
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  });

  if (!options.static_dir.empty()) {
    server.set_mount_point("/", options.static_dir);
  }
}

Service::Service(ResultStore& store, TelemetryProvider& provider, Clock& clock,
                 ServiceOptions options)
    : impl_(std::make_unique<Impl>(store, provider, clock, std::move(options))) {
  impl_->routes();
}

Service::~Service() { stop(); }

void Service::start() {
  auto& i = *impl_;
  if (i.options.port == 0) {
    i.port = i.server.bind_to_any_port(i.options.host);
    if (i.port <= 0) {
      throw BindFailure("cannot bind " + i.options.host);
    }
  } else {
    if (!i.server.bind_to_port(i.options.host, i.options.port)) {
      throw BindFailure("cannot bind " + i.options.host + ":" + std::to_string(i.options.port));
    }
    i.port = i.options.port;
  }
  i.listener = std::thread([&i] { i.server.listen_after_bind(); });
  i.server.wait_until_ready();

  if (i.options.run_monitor) {
    MonitorOptions monitor_options;
    monitor_options.interval_s = i.options.monitor_interval_s;
    const auto power = i.options.bench.power;
    i.monitor = std::make_unique<BackgroundMonitor>(
        i.provider, i.clock, monitor_options, [&i, power](const MetricsSnapshot& s) {
          i.feed.publish(live_event(s, estimate_power(s, power)).dump());
        });
  }
}

int Service::port() const noexcept { return impl_->port; }

void Service::stop() {
  auto& i = *impl_;
  if (i.stopping.exchange(true)) {
    return;
  }
  if (i.monitor) {
    try {
      i.monitor->join();
    } catch (const std::exception&) {
      // monitor failures are reported through the feed being silent
    }
    i.monitor.reset();
  }
  i.jobs.shutdown();
  i.feed.close_all();
  if (i.listener.joinable()) {
    i.server.stop();
    i.listener.join();
  }
}

LiveFeed& Service::feed() noexcept { return impl_->feed; }

JobManager& Service::jobs() noexcept { return impl_->jobs; }

}  // namespace envirollm
