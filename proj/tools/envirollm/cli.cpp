#include "cli.hpp"

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "envirollm/advisor.hpp"
#include "envirollm/bench.hpp"
#include "envirollm/clients.hpp"
#include "envirollm/clock.hpp"
#include "envirollm/engine.hpp"
#include "envirollm/errors.hpp"
#include "envirollm/json_io.hpp"
#include "envirollm/sampler.hpp"
#include "envirollm/service.hpp"
#include "envirollm/store.hpp"
#include "envirollm/telemetry.hpp"

namespace envirollm::cli {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first != std::string::npos) {
      out.push_back(item.substr(first, last - first + 1));
    }
  }
  return out;
}

std::string preset_ids() {
  std::string ids;
  for (const auto& p : preset_prompts()) {
    ids += (ids.empty() ? "" : ", ") + p.id;
  }
  return ids;
}

std::string mib(std::uint64_t bytes) { return fixed(static_cast<double>(bytes) / (1024.0 * 1024.0), 1); }

std::string gb(std::uint64_t bytes) { return fixed(static_cast<double>(bytes) / 1e9, 1); }

// Options shared by every command, filled in by CLI11.
struct Globals {
  std::optional<std::string> config_file;
  std::optional<std::string> db;
};

// Per-invocation wiring of clock, provider and config.
class Session {
 public:
  Session(CliContext& ctx, const Globals& globals)
      : ctx_(ctx),
        config_(load_config(ctx.env, globals.config_file
                                         ? std::optional<std::filesystem::path>(*globals.config_file)
                                         : std::nullopt)) {
    if (globals.db) {
      config_.db_path = *globals.db;
    }
  }

  CliConfig& config() { return config_; }

  Clock& clock() {
    if (ctx_.clock) {
      return *ctx_.clock;
    }
    if (!steady_) {
      steady_ = std::make_unique<SteadyClock>();
    }
    return *steady_;
  }

  TelemetryProvider& provider() {
    if (!provider_) {
      provider_ = ctx_.make_provider ? ctx_.make_provider(clock())
                                     : std::make_unique<SystemTelemetryProvider>();
    }
    return *provider_;
  }

  ResultStore& store() {
    if (!store_) {
      store_ = std::make_unique<ResultStore>(config_.db_path);
    }
    return *store_;
  }

 private:
  CliContext& ctx_;
  CliConfig config_;
  std::unique_ptr<SteadyClock> steady_;
  std::unique_ptr<TelemetryProvider> provider_;
  std::unique_ptr<ResultStore> store_;
};

// ---- monitor -----------------------------------------------------------------

struct MonitorArgs {
  std::optional<double> interval;
  bool json = false;
  std::optional<std::size_t> samples;
};

std::string monitor_line(const MetricsSnapshot& s, double watts) {
  std::ostringstream line;
  line << s.wall_time << "  ";
  if (s.per_process.empty()) {
    line << "no LLM processes detected";
  } else {
    bool first = true;
    for (const auto& p : s.per_process) {
      line << (first ? "" : "; ") << p.name << "[" << p.pid << "] " << to_string(p.platform)
           << " cpu " << fixed(p.cpu_percent, 1) << "% rss " << mib(p.rss_bytes) << " MiB";
      first = false;
    }
  }
  if (s.gpu) {
    line << " | gpu " << fixed(s.gpu->utilization_percent, 0) << "% " << gb(s.gpu->memory_used_bytes)
         << "/" << gb(s.gpu->memory_total_bytes) << " GB " << fixed(s.gpu->temperature_celsius, 0)
         << "C";
    if (s.gpu->power_watts) {
      line << " " << fixed(*s.gpu->power_watts, 1) << " W";
    }
  }
  line << " | est. " << fixed(watts, 1) << " W";
  return line.str();
}

int cmd_monitor(CliContext& ctx, Session& session, const MonitorArgs& args) {
  MonitorOptions options;
  options.interval_s = args.interval.value_or(session.config().monitor_interval_s);
  options.max_samples = args.samples;
  if (!(options.interval_s > 0)) {
    throw UsageError("--interval must be positive");
  }
  const auto power = session.config().power;
  try {
    run_monitor(session.provider(), session.clock(), options,
                [&](const MetricsSnapshot& s) {
                  const double watts = estimate_power(s, power);
                  if (args.json) {
                    ctx.out << live_event(s, watts).dump() << '\n';
                    if (s.per_process.empty()) {
                      ctx.err << "no LLM processes detected\n";
                    }
                  } else {
                    ctx.out << monitor_line(s, watts) << '\n';
                    for (const auto& w : s.warnings) {
                      ctx.err << "warning: " << w << '\n';
                    }
                  }
                  ctx.out.flush();
                },
                ctx.stop);
  } catch (const ProcessEnumerationDenied& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

// ---- benchmark ---------------------------------------------------------------

struct BenchmarkArgs {
  std::string models;
  std::string model;
  std::optional<std::string> prompts;
  std::vector<std::string> prompt_files;
  std::optional<std::string> url;
  std::optional<double> interval;
  std::optional<double> timeout;
  bool stream = false;
  bool no_judge = false;
  std::optional<std::string> judge_model;
  std::optional<std::string> judge_url;
  std::string api_key;
};

std::vector<PromptSpec> resolve_prompts(const BenchmarkArgs& args) {
  std::vector<PromptSpec> prompts;
  if (args.prompts) {
    for (const auto& id : split_list(*args.prompts)) {
      auto preset = find_preset(id);
      if (!preset) {
        throw UsageError("unknown prompt id '" + id + "' (presets: " + preset_ids() + ")");
      }
      prompts.push_back(*preset);
    }
  }
  std::size_t n = 0;
  for (const auto& file : args.prompt_files) {
    std::ifstream in(file);
    if (!in) {
      throw UsageError("cannot read prompt file " + file);
    }
    std::ostringstream text;
    text << in.rdbuf();
    if (normalize_prompt(text.str()).empty()) {
      throw UsageError("prompt file " + file + " is empty");
    }
    prompts.push_back({"custom-" + std::to_string(++n), PromptCategory::Custom, text.str()});
  }
  if (!args.prompts && args.prompt_files.empty()) {
    prompts = preset_prompts();
  }
  if (prompts.empty()) {
    throw UsageError("no prompts selected (presets: " + preset_ids() + ")");
  }
  return prompts;
}

BenchmarkConfig bench_config(const CliConfig& config, const BenchmarkArgs& args) {
  BenchmarkConfig bench;
  bench.power = config.power;
  bench.judge = config.judge;
  bench.sample_interval_s = args.interval.value_or(config.monitor_interval_s);
  if (args.timeout) {
    bench.timeout_s = *args.timeout;
  }
  bench.stream = args.stream;
  bench.api_key = args.api_key;
  if (args.no_judge) {
    bench.judge.enabled = false;
  }
  if (args.judge_model) {
    bench.judge.model = *args.judge_model;
  }
  if (args.judge_url) {
    bench.judge.url = *args.judge_url;
  }
  if (!(bench.sample_interval_s > 0)) {
    throw UsageError("--interval must be positive");
  }
  if (!(bench.timeout_s > 0)) {
    throw UsageError("--timeout must be positive");
  }
  return bench;
}

void print_table(std::ostream& out, const std::vector<BenchmarkResult>& results,
                 const std::map<std::string, std::string>& prompt_ids) {
  struct Row {
    std::vector<std::string> cells;
  };
  const std::vector<std::string> header{"MODEL",  "PROMPT", "QUANT",  "TOKENS", "TIME(s)",
                                        "TOK/S", "WH",     "WH/TOK", "QUALITY"};
  std::vector<Row> rows;
  bool estimated = false;
  for (const auto& r : results) {
    auto id = prompt_ids.count(r.prompt_hash) ? prompt_ids.at(r.prompt_hash) : r.prompt_hash.substr(0, 8);
    estimated = estimated || r.tokens_estimated;
    rows.push_back({{r.model, id, r.quantization.raw.empty() ? "-" : r.quantization.raw,
                     std::to_string(r.tokens) + (r.tokens_estimated ? "*" : ""),
                     fixed(r.duration_s, 2), fixed(r.tokens_per_s, 1), fixed(r.energy_wh, 3),
                     fixed(r.wh_per_token, 6),
                     std::to_string(r.quality.value) + " (" + std::string(to_string(r.quality.method)) + ")"}});
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) {
      width[c] = std::max(width[c], row.cells[c].size());
    }
  }
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      // text columns left aligned, numbers right aligned
      if (c < 3 || c == cells.size() - 1) {
        out << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
      } else {
        out << std::right << std::setw(static_cast<int>(width[c])) << cells[c];
      }
      out << (c + 1 < cells.size() ? "  " : "\n");
    }
  };
  emit(header);
  for (const auto& row : rows) {
    emit(row.cells);
  }
  out << std::left;
  if (estimated) {
    out << "* token count estimated from response length (server reported no usage)\n";
  }

  const auto aggregates = aggregate_results(results);
  if (aggregates.size() > 1) {
    out << "\nper model:\n";
    for (const auto& a : aggregates) {
      out << "  " << a.model << ": " << a.count << " runs, mean " << fixed(a.mean_energy_wh, 3)
          << " Wh, " << fixed(a.mean_tokens_per_s, 1) << " tok/s, " << fixed(a.mean_wh_per_token, 6)
          << " Wh/tok, quality " << fixed(a.mean_quality, 0) << '\n';
    }
  }
}

int run_sweep(CliContext& ctx, Session& session, const BenchmarkArgs& args, bool openai) {
  const auto prompts = resolve_prompts(args);
  const auto config = bench_config(session.config(), args);
  std::vector<std::string> models;
  std::string url;
  if (openai) {
    models = {args.model};
    url = *args.url;
  } else {
    models = split_list(args.models);
    if (models.empty()) {
      throw UsageError("--models needs at least one model name");
    }
    url = args.url.value_or(session.config().ollama_url);
  }
  try {
    Endpoint::parse(url);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::map<std::string, std::string> prompt_ids;
  for (const auto& p : prompts) {
    prompt_ids.emplace(prompt_hash(p.text), p.id);
  }

  auto& store = session.store();
  BenchmarkEngine engine(session.provider(), session.clock(), config);
  std::size_t total = models.size() * prompts.size();
  SweepObserver observer;
  observer.on_result = [&](BenchmarkResult& r) {
    r.id = store.save(r);
    ctx.err << "  ok   " << r.model << " / " << prompt_ids[r.prompt_hash] << '\n';
  };
  observer.on_failure = [&](const PairFailure& f) {
    ctx.err << "  FAIL " << f.model << " / " << f.prompt_id << ": " << to_string(f.kind) << '\n';
  };
  observer.on_progress = [&](std::size_t done, std::size_t all) {
    total = all;
    ctx.err << "[" << done << "/" << all << "]\n";
  };

  SweepOutcome outcome;
  try {
    outcome = openai ? engine.run_openai(url, args.model, prompts, observer, ctx.stop)
                     : engine.run_ollama(models, prompts, url, observer, ctx.stop);
  } catch (const EndpointUnreachable& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kExitUnreachable;
  }

  if (!outcome.results.empty()) {
    print_table(ctx.out, outcome.results, prompt_ids);
  }
  if (!outcome.failures.empty()) {
    ctx.out << '\n' << outcome.failures.size() << " of " << total << " pairs failed:\n";
    for (const auto& f : outcome.failures) {
      ctx.out << "  " << f.model << " / " << f.prompt_id << ": " << to_string(f.kind) << ": "
              << f.message << '\n';
    }
  }
  ctx.out << outcome.results.size() << " results saved to " << store.path().string() << '\n';
  return outcome.results.empty() ? kExitBenchmarkFailed : kExitOk;
}

// ---- export / clean ----------------------------------------------------------

int cmd_export(CliContext& ctx, Session& session, const std::string& out_path) {
  auto& store = session.store();
  if (out_path.empty() || out_path == "-") {
    const auto rows = store.export_csv(ctx.out);
    ctx.err << "exported " << rows << " rows\n";
    return kExitOk;
  }
  const auto rows = store.export_csv(std::filesystem::path(out_path));
  ctx.out << "exported " << rows << " rows to " << out_path << '\n';
  return kExitOk;
}

struct CleanArgs {
  bool all = false;
  std::optional<std::string> model;
  std::optional<std::string> before;
  bool yes = false;
};

int cmd_clean(CliContext& ctx, Session& session, const CleanArgs& args) {
  const int chosen = (args.all ? 1 : 0) + (args.model ? 1 : 0) + (args.before ? 1 : 0);
  if (chosen != 1) {
    throw UsageError("clean needs exactly one of --all, --model NAME, --before TIMESTAMP");
  }
  CleanScope scope;
  std::string description;
  if (args.all) {
    scope = CleanAll{};
    description = "all stored results";
  } else if (args.model) {
    scope = CleanModel{*args.model};
    description = "all results for model " + *args.model;
  } else {
    scope = CleanOlderThan{*args.before};
    description = "results older than " + *args.before;
  }
  auto& store = session.store();
  if (!args.yes) {
    ctx.out << "Delete " << description << "? [y/N] " << std::flush;
    std::string answer;
    std::getline(ctx.in, answer);
    if (answer != "y" && answer != "Y" && answer != "yes") {
      ctx.out << "aborted, nothing deleted\n";
      return kExitOk;
    }
  }
  const auto deleted = store.clean(scope);
  ctx.out << "deleted " << deleted << " results\n";
  return kExitOk;
}

// ---- serve -------------------------------------------------------------------

struct ServeArgs {
  std::string bind = "127.0.0.1:8090";
  std::optional<std::string> advisor_config;
  std::optional<std::string> static_dir;
  std::optional<double> interval;
};

int cmd_serve(CliContext& ctx, Session& session, const ServeArgs& args) {
  ServiceOptions options;
  const auto colon = args.bind.rfind(':');
  if (colon == std::string::npos) {
    throw UsageError("--bind expects HOST:PORT");
  }
  options.host = args.bind.substr(0, colon);
  try {
    std::size_t used = 0;
    options.port = std::stoi(args.bind.substr(colon + 1), &used);
    if (used != args.bind.size() - colon - 1 || options.port < 0 || options.port > 65535) {
      throw std::out_of_range("port");
    }
  } catch (const std::exception&) {
    throw UsageError("invalid port in --bind " + args.bind);
  }
  options.monitor_interval_s = args.interval.value_or(session.config().monitor_interval_s);
  if (!(options.monitor_interval_s > 0)) {
    throw UsageError("--interval must be positive");
  }
  options.bench.power = session.config().power;
  options.bench.judge = session.config().judge;
  options.bench.sample_interval_s = options.monitor_interval_s;
  if (args.advisor_config) {
    try {
      options.advisor = load_advisor_table(*args.advisor_config);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (args.static_dir) {
    options.static_dir = *args.static_dir;
  }

  Service service(session.store(), session.provider(), session.clock(), options);
  try {
    service.start();
  } catch (const BindFailure& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  ctx.out << "listening on http://" << options.host << ":" << service.port() << std::endl;

  std::mutex mutex;
  std::condition_variable_any cv;
  std::unique_lock lock(mutex);
  cv.wait(lock, ctx.stop, [] { return false; });
  lock.unlock();

  service.stop();
  ctx.out << "stopped" << std::endl;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, CliContext& ctx) {
  CLI::App app{"Profile local LLM inference: resources, energy, speed and quality.", "envirollm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  Globals globals;
  app.add_option("--config", globals.config_file, "Config file (key = value)");
  app.add_option("--db", globals.db, "Result database path");

  MonitorArgs monitor_args;
  auto* monitor = app.add_subcommand("monitor", "Sample LLM processes until interrupted");
  monitor->add_option("--interval", monitor_args.interval, "Seconds between samples")
      ->check(CLI::PositiveNumber);
  monitor->add_flag("--json", monitor_args.json, "One JSON object per line");
  monitor->add_option("--samples", monitor_args.samples, "Stop after N samples")
      ->check(CLI::PositiveNumber);

  BenchmarkArgs bench_args;
  auto add_bench_options = [&](CLI::App* cmd) {
    cmd->add_option("--prompts", bench_args.prompts, "Comma-separated preset ids (" + preset_ids() + ")");
    cmd->add_option("--prompt-file", bench_args.prompt_files, "File holding one custom prompt")
        ->check(CLI::ExistingFile);
    cmd->add_option("--interval", bench_args.interval, "Telemetry sampling interval in seconds")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--timeout", bench_args.timeout, "Per-request timeout in seconds")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--stream", bench_args.stream, "Use streaming responses");
    cmd->add_flag("--no-judge", bench_args.no_judge, "Score with the offline heuristic only");
    cmd->add_option("--judge-model", bench_args.judge_model, "Ollama model used as judge");
    cmd->add_option("--judge-url", bench_args.judge_url, "Ollama endpoint hosting the judge");
  };
  auto* benchmark = app.add_subcommand("benchmark", "Benchmark Ollama models on prompts");
  benchmark->add_option("--models", bench_args.models, "Comma-separated model names")->required();
  benchmark->add_option("--url", bench_args.url, "Ollama endpoint");
  add_bench_options(benchmark);

  auto* benchmark_openai =
      app.add_subcommand("benchmark-openai", "Benchmark a model behind an OpenAI-compatible server");
  benchmark_openai->add_option("--url", bench_args.url, "Base URL, e.g. http://localhost:1234/v1")
      ->required();
  benchmark_openai->add_option("--model", bench_args.model, "Model name")->required();
  benchmark_openai->add_option("--api-key", bench_args.api_key, "Bearer token, if the server needs one");
  add_bench_options(benchmark_openai);

  std::string export_out;
  auto* export_cmd = app.add_subcommand("export", "Export stored results as CSV");
  export_cmd->add_option("--out", export_out, "Destination file (default stdout)");

  CleanArgs clean_args;
  auto* clean = app.add_subcommand("clean", "Delete stored results");
  clean->add_flag("--all", clean_args.all, "Delete everything");
  clean->add_option("--model", clean_args.model, "Delete results for one model");
  clean->add_option("--before", clean_args.before, "Delete results older than an ISO-8601 timestamp");
  clean->add_flag("--yes,-y", clean_args.yes, "Skip the confirmation prompt");

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API for the dashboard");
  serve->add_option("--bind", serve_args.bind, "HOST:PORT to listen on (port 0 picks one)")
      ->capture_default_str();
  serve->add_option("--advisor-config", serve_args.advisor_config, "Advisor table JSON")
      ->check(CLI::ExistingFile);
  serve->add_option("--static", serve_args.static_dir, "Directory of dashboard assets")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--interval", serve_args.interval, "Live monitor interval in seconds")
      ->check(CLI::PositiveNumber);

  for (auto* sub : app.get_subcommands({})) {
    sub->fallthrough();
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, ctx.out, ctx.err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Session session(ctx, globals);
    if (monitor->parsed()) {
      return cmd_monitor(ctx, session, monitor_args);
    }
    if (benchmark->parsed()) {
      return run_sweep(ctx, session, bench_args, false);
    }
    if (benchmark_openai->parsed()) {
      return run_sweep(ctx, session, bench_args, true);
    }
    if (export_cmd->parsed()) {
      return cmd_export(ctx, session, export_out);
    }
    if (clean->parsed()) {
      return cmd_clean(ctx, session, clean_args);
    }
    if (serve->parsed()) {
      return cmd_serve(ctx, session, serve_args);
    }
  } catch (const UsageError& e) {
    ctx.err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    // configuration problems surface as invalid arguments
    ctx.err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const StorageError& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    ctx.err << "error: " << e.what() << '\n';
    return kExitBenchmarkFailed;
  }
  return kExitUsage;
}

}  // namespace envirollm::cli
