#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "envirollm/quality.hpp"

namespace envirollm {

enum class PromptCategory { Explanation, CodeGen, Summarization, LongForm, Analysis, Custom };

std::string_view to_string(PromptCategory category);
std::optional<PromptCategory> parse_prompt_category(std::string_view text);

struct PromptSpec {
  std::string id;
  PromptCategory category = PromptCategory::Custom;
  std::string text;

  bool operator==(const PromptSpec&) const = default;
};

/// The five built-in prompts, one per task category. Ids and text are stable.
const std::vector<PromptSpec>& preset_prompts();

/// Looks up a preset by id.
std::optional<PromptSpec> find_preset(std::string_view id);

enum class QuantFamily { Q2, Q3, Q4, Q5, Q6, Q8, FP16, FP32, INT4, INT8, Unknown };

std::string_view to_string(QuantFamily family);
std::optional<QuantFamily> parse_quant_family(std::string_view text);

struct QuantLabel {
  std::string raw;
  QuantFamily family = QuantFamily::Unknown;

  bool operator==(const QuantLabel&) const = default;
};

/// Quantization tag found in `text` (rightmost match wins), or Unknown.
QuantLabel match_quantization(std::string_view text);

/// Applies the pattern table to the model name, then to the platform
/// metadata when the name carries no tag. Throws std::invalid_argument on an
/// empty model name.
QuantLabel detect_quantization(std::string_view model_name,
                               std::optional<std::string_view> platform_metadata = std::nullopt);

/// Tokenizer-free estimate: ceil(code points / 4).
std::int64_t estimate_tokens(std::string_view text);

enum class ApiPlatform { Ollama, OpenAICompatible };

std::string_view to_string(ApiPlatform platform);
std::optional<ApiPlatform> parse_api_platform(std::string_view text);

struct BenchmarkResult {
  std::int64_t id = 0;  // assigned by the store
  std::string timestamp;
  ApiPlatform platform = ApiPlatform::Ollama;
  std::string endpoint_url;
  std::string model;
  QuantLabel quantization;
  std::string prompt_hash;
  std::string prompt_text;
  std::string response_text;
  std::int64_t tokens = 0;
  bool tokens_estimated = false;
  double duration_s = 0.0;        // generation time used for speed
  double duration_total_s = 0.0;  // request-to-completion wall clock
  double tokens_per_s = 0.0;
  double energy_wh = 0.0;
  double wh_per_token = 0.0;
  QualityScore quality;

  bool operator==(const BenchmarkResult&) const = default;
};

/// Throws InvariantViolation when the arithmetic identities or field ranges
/// of a result do not hold.
void validate(const BenchmarkResult& result);

struct DerivedMetrics {
  double tokens_per_s = 0.0;
  double wh_per_token = 0.0;
};

/// tokens/duration and energy/tokens (0 for zero tokens).
/// Throws std::invalid_argument when duration_s <= 0 or tokens < 0.
DerivedMetrics derive_metrics(double energy_wh, std::int64_t tokens, double duration_s);

struct ModelAggregate {
  std::string model;
  std::size_t count = 0;
  double mean_energy_wh = 0.0;
  double mean_tokens_per_s = 0.0;
  double mean_wh_per_token = 0.0;
  double mean_quality = 0.0;
  std::int64_t min_tokens = 0;
  std::int64_t max_tokens = 0;
};

/// Per-model arithmetic means, in order of each model's first appearance.
std::vector<ModelAggregate> aggregate_results(std::span<const BenchmarkResult> results);

}  // namespace envirollm
