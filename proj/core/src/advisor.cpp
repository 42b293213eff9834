#include "envirollm/advisor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "envirollm/errors.hpp"
#include "envirollm/telemetry.hpp"

namespace envirollm {
namespace {

constexpr double kBytesPerGB = 1e9;

std::string fixed(double v, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

}  // namespace

void validate(const HardwareProfile& p) {
  if (p.available_ram_bytes > p.total_ram_bytes) {
    throw InvariantViolation("available RAM exceeds total RAM");
  }
  if (p.gpu && p.gpu->vram_free_bytes > p.gpu->vram_total_bytes) {
    throw InvariantViolation("free VRAM exceeds total VRAM");
  }
  if (p.logical_cores == 0) {
    throw InvariantViolation("logical core count must be positive");
  }
}

HardwareProfile detect_hardware(TelemetryProvider& provider) {
  HardwareProfile p;
  const auto mem = provider.read_memory();
  p.total_ram_bytes = mem.total_bytes;
  p.available_ram_bytes = mem.available_bytes;
  p.logical_cores = provider.logical_cores();
  if (auto gpu = provider.read_gpu(); gpu && gpu->memory_total_bytes > 0) {
    GpuProfile g;
    g.name = gpu->name;
    g.vram_total_bytes = gpu->memory_total_bytes;
    if (gpu->memory_used_bytes > gpu->memory_total_bytes) {
      throw InvariantViolation("GPU memory used exceeds total");
    }
    g.vram_free_bytes = gpu->memory_total_bytes - gpu->memory_used_bytes;
    p.gpu = g;
  }
  validate(p);
  return p;
}

AdvisorTable parse_advisor_table(std::string_view json_text) {
  AdvisorTable table;
  try {
    const auto j = nlohmann::json::parse(json_text);
    table.usable_fraction = j.value("usable_fraction", table.usable_fraction);
    table.overhead_fraction = j.value("overhead_fraction", table.overhead_fraction);
    table.min_params_billions = j.value("min_params_billions", table.min_params_billions);
    if (j.contains("quants")) {
      table.quants.clear();
      for (const auto& q : j.at("quants")) {
        const auto name = q.at("family").get<std::string>();
        const auto family = parse_quant_family(name);
        if (!family || *family == QuantFamily::Unknown) {
          throw std::invalid_argument("unknown quant family in advisor table: " + name);
        }
        table.quants.push_back({*family, q.at("gb_per_billion_params").get<double>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid advisor table: ") + e.what());
  }
  if (!(table.usable_fraction > 0 && table.usable_fraction <= 1)) {
    throw std::invalid_argument("usable_fraction must be in (0, 1]");
  }
  if (!(table.overhead_fraction >= 0)) {
    throw std::invalid_argument("overhead_fraction must be >= 0");
  }
  if (!(table.min_params_billions > 0)) {
    throw std::invalid_argument("min_params_billions must be > 0");
  }
  if (table.quants.empty()) {
    throw std::invalid_argument("advisor table needs at least one quant row");
  }
  for (const auto& q : table.quants) {
    if (!(q.gb_per_billion_params > 0)) {
      throw std::invalid_argument("gb_per_billion_params must be > 0");
    }
  }
  return table;
}

AdvisorTable load_advisor_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot read advisor table " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_advisor_table(text.str());
}

MemoryBudget binding_budget(const HardwareProfile& profile, const AdvisorTable& table) {
  const double ram = static_cast<double>(profile.available_ram_bytes) / kBytesPerGB *
                     table.usable_fraction;
  if (profile.gpu) {
    const double vram =
        static_cast<double>(profile.gpu->vram_free_bytes) / kBytesPerGB * table.usable_fraction;
    if (vram <= ram) {
      return {vram, true};
    }
  }
  return {ram, false};
}

std::vector<Recommendation> recommend(const HardwareProfile& profile, const AdvisorTable& table) {
  validate(profile);
  const auto budget = binding_budget(profile, table);
  std::vector<Recommendation> out;
  for (const auto& q : table.quants) {
    const double per_billion = q.gb_per_billion_params * (1.0 + table.overhead_fraction);
    // Rounded down to 0.1 B.
    const double max_params = std::floor(budget.gigabytes / per_billion * 10.0) / 10.0;
    if (max_params < table.min_params_billions || max_params <= 0) {
      continue;
    }
    Recommendation rec;
    rec.max_params_billions = max_params;
    rec.suggested_quant = q.family;
    const auto source = budget.gpu_bound ? std::string("GPU VRAM") : std::string("system RAM");
    const auto free_gb =
        budget.gpu_bound ? static_cast<double>(profile.gpu->vram_free_bytes) / kBytesPerGB
                         : static_cast<double>(profile.available_ram_bytes) / kBytesPerGB;
    rec.rationale = "Bound by " + source + ": " + fixed(free_gb, 1) + " GB available x " +
                    fixed(table.usable_fraction * 100, 0) + "% usable = " +
                    fixed(budget.gigabytes, 1) + " GB budget. At " +
                    std::string(to_string(q.family)) + " (~" + fixed(q.gb_per_billion_params, 1) +
                    " GB per billion parameters plus " + fixed(table.overhead_fraction * 100, 0) +
                    "% runtime overhead) models up to " + fixed(max_params, 1) +
                    "B parameters fit.";
    out.push_back(std::move(rec));
  }
  std::stable_sort(out.begin(), out.end(), [](const Recommendation& a, const Recommendation& b) {
    return a.max_params_billions > b.max_params_billions;
  });
  if (out.size() > 3) {
    out.resize(3);
  }
  return out;
}

}  // namespace envirollm
