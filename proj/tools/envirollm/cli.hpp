#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <stop_token>
#include <string>
#include <vector>

#include "config.hpp"

namespace envirollm {
class Clock;
class TelemetryProvider;
}  // namespace envirollm

namespace envirollm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBenchmarkFailed = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUnreachable = 3;
inline constexpr int kExitUsage = 64;

using ProviderFactory = std::function<std::unique_ptr<TelemetryProvider>(Clock&)>;

/// Everything a command touches outside its arguments, injectable for
/// in-process runs.
struct CliContext {
  std::ostream& out;
  std::ostream& err;
  std::istream& in;
  EnvLookup env = process_env();
  ProviderFactory make_provider;  // empty: read the host
  Clock* clock = nullptr;         // empty: steady clock
  std::stop_token stop;
};

/// Runs one command. `args` excludes the program name. Returns the exit code.
int run(const std::vector<std::string>& args, CliContext& ctx);

}  // namespace envirollm::cli
