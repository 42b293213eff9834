#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "envirollm/store.hpp"

namespace envirollm::cli {
namespace {

namespace pt = boost::property_tree;

// TOML strings are quoted; INI parsing keeps the quotes.
std::string unquote(std::string value) {
  if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
      value.back() == value.front()) {
    return value.substr(1, value.size() - 2);
  }
  return value;
}

double number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config key '" + key + "' expects a number, got '" + value + "'");
}

bool boolean(const std::string& key, const std::string& value) {
  if (value == "true") {
    return true;
  }
  if (value == "false") {
    return false;
  }
  throw std::invalid_argument("config key '" + key + "' expects true or false");
}

}  // namespace

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str()); v && *v) {
      return std::string(v);
    }
    return std::nullopt;
  };
}

std::filesystem::path default_config_path(const EnvLookup& env) {
  if (auto xdg = env("XDG_CONFIG_HOME")) {
    return std::filesystem::path(*xdg) / "envirollm" / "config.toml";
  }
  if (auto home = env("HOME")) {
    return std::filesystem::path(*home) / ".config" / "envirollm" / "config.toml";
  }
  return std::filesystem::path("envirollm.toml");
}

void apply_config_file(CliConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    return;
  }
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument("cannot parse " + path.string() + ": " + e.message());
  }

  double baseline = config.power.baseline_watts();
  double cpu_max = config.power.cpu_max_watts();
  double gpu_max = config.power.gpu_max_watts();

  for (const auto& [key, node] : tree) {
    if (key == "judge") {
      for (const auto& [jkey, jnode] : node) {
        const auto value = unquote(jnode.data());
        if (jkey == "model") {
          config.judge.model = value;
        } else if (jkey == "url") {
          config.judge.url = value;
        } else if (jkey == "enabled") {
          config.judge.enabled = boolean("judge.enabled", value);
        } else if (jkey == "timeout_s") {
          config.judge.timeout_s = number("judge.timeout_s", value);
        } else {
          throw std::invalid_argument("unknown config key 'judge." + jkey + "'");
        }
      }
      continue;
    }
    const auto value = unquote(node.data());
    if (key == "db_path") {
      config.db_path = value;
    } else if (key == "ollama_url") {
      config.ollama_url = value;
    } else if (key == "openai_url") {
      config.openai_url = value;
    } else if (key == "monitor_interval") {
      config.monitor_interval_s = number(key, value);
    } else if (key == "baseline_watts") {
      baseline = number(key, value);
    } else if (key == "cpu_max_watts") {
      cpu_max = number(key, value);
    } else if (key == "gpu_max_watts") {
      gpu_max = number(key, value);
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  config.power = PowerConfig(baseline, cpu_max, gpu_max);
  if (!(config.monitor_interval_s > 0)) {
    throw std::invalid_argument("config key 'monitor_interval' must be positive");
  }
}

void apply_env(CliConfig& config, const EnvLookup& env) {
  if (auto db = env("ENVIROLLM_DB")) {
    config.db_path = *db;
  }
  if (auto url = env("ENVIROLLM_OLLAMA_URL")) {
    config.ollama_url = *url;
  }
  if (auto model = env("ENVIROLLM_JUDGE_MODEL")) {
    config.judge.model = *model;
  }
}

CliConfig load_config(const EnvLookup& env, const std::optional<std::filesystem::path>& file) {
  CliConfig config;
  if (auto xdg = env("XDG_DATA_HOME")) {
    config.db_path = std::filesystem::path(*xdg) / "envirollm" / "benchmarks.db";
  } else if (auto home = env("HOME")) {
    config.db_path = std::filesystem::path(*home) / ".local" / "share" / "envirollm" / "benchmarks.db";
  } else {
    config.db_path = default_database_path();
  }
  apply_config_file(config, file.value_or(default_config_path(env)));
  apply_env(config, env);
  return config;
}

}  // namespace envirollm::cli
