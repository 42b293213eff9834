#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "envirollm/bench.hpp"

namespace envirollm {

class TelemetryProvider;

struct GpuProfile {
  std::string name;
  std::uint64_t vram_total_bytes = 0;
  std::uint64_t vram_free_bytes = 0;
};

struct HardwareProfile {
  std::uint64_t total_ram_bytes = 0;
  std::uint64_t available_ram_bytes = 0;
  std::optional<GpuProfile> gpu;
  unsigned logical_cores = 1;
};

/// Throws InvariantViolation when available > total or free > total VRAM.
void validate(const HardwareProfile& profile);

/// Reads RAM, GPU memory and core count from the provider and validates
/// the result.
HardwareProfile detect_hardware(TelemetryProvider& provider);

struct QuantFootprint {
  QuantFamily family = QuantFamily::Q4;
  double gb_per_billion_params = 0.7;
};

/// Sizing table. Footprint of a model is
/// params x gb_per_billion x (1 + overhead_fraction).
struct AdvisorTable {
  double usable_fraction = 0.8;
  double overhead_fraction = 0.2;
  double min_params_billions = 0.5;
  std::vector<QuantFootprint> quants{
      {QuantFamily::Q4, 0.7}, {QuantFamily::Q8, 1.2}, {QuantFamily::FP16, 2.2}};
};

/// Parses the JSON table format shipped in data/advisor_table.json.
/// Throws std::invalid_argument.
AdvisorTable parse_advisor_table(std::string_view json_text);
AdvisorTable load_advisor_table(const std::filesystem::path& path);

struct Recommendation {
  double max_params_billions = 0.0;
  QuantFamily suggested_quant = QuantFamily::Q4;
  std::string rationale;
  std::string confidence = "threshold-based";
};

/// Budget in GB (decimal) that bounds model size, and which memory it is.
struct MemoryBudget {
  double gigabytes = 0.0;
  bool gpu_bound = false;
};

MemoryBudget binding_budget(const HardwareProfile& profile, const AdvisorTable& table = {});

/// Up to one recommendation per table row, largest model first; rows that
/// cannot fit min_params_billions are omitted. Empty when nothing fits.
std::vector<Recommendation> recommend(const HardwareProfile& profile,
                                      const AdvisorTable& table = {});

}  // namespace envirollm
