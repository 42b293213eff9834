#include "envirollm/telemetry.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "envirollm/clock.hpp"
#include "envirollm/errors.hpp"

namespace envirollm {
namespace {

namespace fs = std::filesystem;

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return std::nullopt;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> to_double(std::string_view s) {
  const auto text = trim(std::string(s));
  if (text.empty()) {
    return std::nullopt;
  }
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    return std::nullopt;
  }
  return v;
}

double monotonic_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::optional<std::string> find_on_path(const std::string& exe) {
  const char* path = std::getenv("PATH");
  if (path == nullptr) {
    return std::nullopt;
  }
  std::stringstream dirs(path);
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) {
      continue;
    }
    const auto candidate = fs::path(dir) / exe;
    if (::access(candidate.c_str(), X_OK) == 0) {
      return candidate.string();
    }
  }
  return std::nullopt;
}

}  // namespace

SystemTelemetryProvider::SystemTelemetryProvider(std::string proc_root)
    : proc_root_(std::move(proc_root)), nvidia_smi_(find_on_path("nvidia-smi")) {}

std::vector<ProcessInfo> SystemTelemetryProvider::list_processes() {
  std::vector<ProcessInfo> out;
  std::error_code ec;
  fs::directory_iterator it(proc_root_, ec);
  if (ec) {
    throw ProcessEnumerationDenied("cannot list " + proc_root_ + ": " + ec.message());
  }
  for (const auto& entry : it) {
    const auto name = entry.path().filename().string();
    int pid = 0;
    const auto [ptr, err] = std::from_chars(name.data(), name.data() + name.size(), pid);
    if (err != std::errc{} || ptr != name.data() + name.size() || pid <= 0) {
      continue;
    }
    auto comm = read_file(entry.path() / "comm");
    if (!comm) {
      continue;  // exited while listing
    }
    ProcessInfo info{pid, trim(*comm), {}};
    if (auto cmdline = read_file(entry.path() / "cmdline")) {
      std::replace(cmdline->begin(), cmdline->end(), '\0', ' ');
      info.command = trim(*cmdline);
    }
    out.push_back(std::move(info));
  }
  return out;
}

std::optional<ProcessUsage> SystemTelemetryProvider::read_process(int pid) {
  const auto dir = fs::path(proc_root_) / std::to_string(pid);
  const auto stat = read_file(dir / "stat");
  const auto statm = read_file(dir / "statm");
  if (!stat || !statm) {
    return std::nullopt;
  }
  // Fields after the parenthesised command name; the name may contain spaces.
  const auto close = stat->rfind(')');
  if (close == std::string::npos) {
    return std::nullopt;
  }
  std::istringstream fields(stat->substr(close + 1));
  std::vector<std::string> parts;
  for (std::string f; fields >> f;) {
    parts.push_back(f);
  }
  // parts[0] is field 3 (state); utime=14, stime=15, starttime=22.
  if (parts.size() < 20) {
    return std::nullopt;
  }
  const auto utime = std::strtoull(parts[11].c_str(), nullptr, 10);
  const auto stime = std::strtoull(parts[12].c_str(), nullptr, 10);
  const auto starttime = std::strtoull(parts[19].c_str(), nullptr, 10);
  const auto ticks = utime + stime;
  const double hz = static_cast<double>(::sysconf(_SC_CLK_TCK));

  std::istringstream mem(*statm);
  std::uint64_t size_pages = 0;
  std::uint64_t resident_pages = 0;
  mem >> size_pages >> resident_pages;
  const auto page = static_cast<std::uint64_t>(::sysconf(_SC_PAGESIZE));

  const double now = monotonic_seconds();
  double cpu_percent = 0.0;
  {
    std::lock_guard lock(mutex_);
    auto it = previous_.find(pid);
    if (it != previous_.end() && now > it->second.wall_seconds &&
        ticks >= it->second.process_ticks) {
      cpu_percent = static_cast<double>(ticks - it->second.process_ticks) / hz /
                    (now - it->second.wall_seconds) * 100.0;
    } else if (auto uptime_text = read_file(fs::path(proc_root_) / "uptime")) {
      // First reading: lifetime average.
      if (auto uptime = to_double(uptime_text->substr(0, uptime_text->find(' ')))) {
        const double age = *uptime - static_cast<double>(starttime) / hz;
        if (age > 0) {
          cpu_percent = static_cast<double>(ticks) / hz / age * 100.0;
        }
      }
    }
    previous_[pid] = CpuTicks{ticks, now};
  }
  return ProcessUsage{std::max(0.0, cpu_percent), resident_pages * page};
}

std::optional<GpuTelemetry> SystemTelemetryProvider::read_gpu() {
  if (!nvidia_smi_) {
    return std::nullopt;
  }
  const std::string cmd = *nvidia_smi_ +
                          " --query-gpu=name,utilization.gpu,memory.used,memory.total,"
                          "temperature.gpu,power.draw --format=csv,noheader,nounits 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    return std::nullopt;
  }
  std::array<char, 512> buf{};
  std::string line;
  if (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) {
    line = buf.data();
  }
  const int status = ::pclose(pipe);
  if (status != 0 || line.empty()) {
    return std::nullopt;
  }
  std::vector<std::string> cols;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) {
    cols.push_back(trim(c));
  }
  if (cols.size() < 6) {
    return std::nullopt;
  }
  constexpr double kMiB = 1024.0 * 1024.0;
  GpuTelemetry gpu;
  gpu.name = cols[0];
  gpu.utilization_percent = to_double(cols[1]).value_or(0.0);
  gpu.memory_used_bytes = static_cast<std::uint64_t>(to_double(cols[2]).value_or(0.0) * kMiB);
  gpu.memory_total_bytes = static_cast<std::uint64_t>(to_double(cols[3]).value_or(0.0) * kMiB);
  gpu.temperature_celsius = to_double(cols[4]).value_or(0.0);
  if (auto power = to_double(cols[5]); power && *power > 0.0) {
    gpu.power_watts = *power;
  }
  return gpu;
}

MemoryInfo SystemTelemetryProvider::read_memory() {
  MemoryInfo info;
  const auto text = read_file(fs::path(proc_root_) / "meminfo");
  if (!text) {
    return info;
  }
  std::istringstream in(*text);
  std::string key;
  std::uint64_t kb = 0;
  std::string unit;
  while (in >> key >> kb) {
    std::getline(in, unit);
    if (key == "MemTotal:") {
      info.total_bytes = kb * 1024;
    } else if (key == "MemAvailable:") {
      info.available_bytes = kb * 1024;
    }
  }
  info.available_bytes = std::min(info.available_bytes, info.total_bytes);
  return info;
}

unsigned SystemTelemetryProvider::logical_cores() {
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<MockSample> parse_mock_script(std::string_view text) {
  std::vector<MockSample> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') {
      continue;
    }
    std::istringstream fields(t);
    std::vector<std::string> cols;
    for (std::string c; fields >> c;) {
      cols.push_back(c);
    }
    if (cols.size() != 5) {
      throw std::invalid_argument("mock script line " + std::to_string(lineno) +
                                  ": expected 5 columns");
    }
    MockSample row;
    const auto t_s = to_double(cols[0]);
    const auto cpu = to_double(cols[1]);
    const auto rss = to_double(cols[2]);
    const auto util = to_double(cols[3]);
    if (!t_s || !cpu || !rss || !util || *cpu < 0 || *rss < 0 || *util < 0) {
      throw std::invalid_argument("mock script line " + std::to_string(lineno) +
                                  ": invalid number");
    }
    row.t = *t_s;
    row.cpu_percent = *cpu;
    row.rss_bytes = static_cast<std::uint64_t>(*rss);
    row.gpu_util = *util;
    if (cols[4] != "-") {
      const auto power = to_double(cols[4]);
      if (!power || *power <= 0) {
        throw std::invalid_argument("mock script line " + std::to_string(lineno) +
                                    ": gpu power must be positive or '-'");
      }
      row.gpu_power_watts = *power;
    }
    if (!rows.empty() && row.t <= rows.back().t) {
      throw std::invalid_argument("mock script line " + std::to_string(lineno) +
                                  ": times must increase");
    }
    rows.push_back(row);
  }
  return rows;
}

MockTelemetryProvider::MockTelemetryProvider(const Clock& clock, Options options)
    : clock_(clock), start_(clock.now()), options_(std::move(options)) {
  if (options_.script.empty()) {
    options_.script.push_back(MockSample{});
  }
}

const MockSample& MockTelemetryProvider::active_row() const {
  const double elapsed = clock_.now() - start_;
  const MockSample* row = &options_.script.front();
  for (const auto& r : options_.script) {
    if (r.t <= elapsed) {
      row = &r;
    } else {
      break;
    }
  }
  return *row;
}

std::vector<ProcessInfo> MockTelemetryProvider::list_processes() {
  std::lock_guard lock(mutex_);
  if (options_.deny_enumeration) {
    throw ProcessEnumerationDenied("process listing denied (mock)");
  }
  std::vector<ProcessInfo> out;
  for (const auto& p : options_.processes) {
    if (!dead_.contains(p.pid)) {
      out.push_back(p);
    }
  }
  return out;
}

std::optional<ProcessUsage> MockTelemetryProvider::read_process(int pid) {
  std::lock_guard lock(mutex_);
  const bool known = std::any_of(options_.processes.begin(), options_.processes.end(),
                                 [pid](const ProcessInfo& p) { return p.pid == pid; });
  if (!known || dead_.contains(pid)) {
    return std::nullopt;
  }
  const auto& row = active_row();
  return ProcessUsage{row.cpu_percent, row.rss_bytes};
}

std::optional<GpuTelemetry> MockTelemetryProvider::read_gpu() {
  std::lock_guard lock(mutex_);
  if (!options_.has_gpu) {
    return std::nullopt;
  }
  const auto& row = active_row();
  GpuTelemetry gpu;
  gpu.name = options_.gpu_name;
  gpu.utilization_percent = row.gpu_util;
  gpu.memory_used_bytes = options_.gpu_memory_used_bytes;
  gpu.memory_total_bytes = options_.gpu_memory_total_bytes;
  gpu.temperature_celsius = options_.gpu_temperature_celsius;
  gpu.power_watts = row.gpu_power_watts;
  return gpu;
}

MemoryInfo MockTelemetryProvider::read_memory() {
  std::lock_guard lock(mutex_);
  return options_.memory;
}

unsigned MockTelemetryProvider::logical_cores() {
  std::lock_guard lock(mutex_);
  return options_.cores;
}

void MockTelemetryProvider::kill(int pid) {
  std::lock_guard lock(mutex_);
  dead_.insert(pid);
}

void MockTelemetryProvider::add_process(ProcessInfo process) {
  std::lock_guard lock(mutex_);
  dead_.erase(process.pid);
  options_.processes.push_back(std::move(process));
}

void MockTelemetryProvider::set_memory(MemoryInfo memory) {
  std::lock_guard lock(mutex_);
  options_.memory = memory;
}

}  // namespace envirollm
