#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "envirollm/energy.hpp"
#include "envirollm/quality.hpp"

namespace envirollm::cli {

struct CliConfig {
  std::filesystem::path db_path;
  PowerConfig power;
  JudgeSettings judge;
  std::string ollama_url = "http://localhost:11434";
  std::string openai_url = "http://localhost:1234/v1";
  double monitor_interval_s = 2.0;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_env();

/// $XDG_CONFIG_HOME/envirollm/config.toml, falling back to ~/.config.
std::filesystem::path default_config_path(const EnvLookup& env);

/// Applies a key = value file (optional [judge] section) on top of `config`.
/// A missing file is not an error; malformed content throws
/// std::invalid_argument naming the offending key.
void apply_config_file(CliConfig& config, const std::filesystem::path& path);

/// Applies ENVIROLLM_DB, ENVIROLLM_OLLAMA_URL and ENVIROLLM_JUDGE_MODEL.
void apply_env(CliConfig& config, const EnvLookup& env);

/// Defaults, then the config file, then the environment. Command-line
/// flags are applied by the caller last.
CliConfig load_config(const EnvLookup& env, const std::optional<std::filesystem::path>& file);

}  // namespace envirollm::cli
