#include "envirollm/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <regex>
#include <stdexcept>

#include "envirollm/errors.hpp"

namespace envirollm {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool close_rel(double a, double b, double rel) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) <= rel * scale;
}

QuantFamily family_from_tag(std::string tag) {
  std::transform(tag.begin(), tag.end(), tag.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (tag.size() >= 2 && tag[0] == 'q') {
    switch (tag[1]) {
      case '2': return QuantFamily::Q2;
      case '3': return QuantFamily::Q3;
      case '4': return QuantFamily::Q4;
      case '5': return QuantFamily::Q5;
      case '6': return QuantFamily::Q6;
      case '8': return QuantFamily::Q8;
      default: return QuantFamily::Unknown;
    }
  }
  if (tag == "int4" || tag == "4bit") {
    return QuantFamily::INT4;
  }
  if (tag == "int8" || tag == "8bit") {
    return QuantFamily::INT8;
  }
  if (tag == "fp16" || tag == "f16") {
    return QuantFamily::FP16;
  }
  if (tag == "fp32") {
    return QuantFamily::FP32;
  }
  return QuantFamily::Unknown;
}

}  // namespace

std::string_view to_string(PromptCategory category) {
  switch (category) {
    case PromptCategory::Explanation: return "explanation";
    case PromptCategory::CodeGen: return "code-generation";
    case PromptCategory::Summarization: return "summarization";
    case PromptCategory::LongForm: return "long-form";
    case PromptCategory::Analysis: return "analysis";
    case PromptCategory::Custom: break;
  }
  return "custom";
}

std::optional<PromptCategory> parse_prompt_category(std::string_view text) {
  for (auto c : {PromptCategory::Explanation, PromptCategory::CodeGen,
                 PromptCategory::Summarization, PromptCategory::LongForm,
                 PromptCategory::Analysis, PromptCategory::Custom}) {
    if (to_string(c) == text) {
      return c;
    }
  }
  return std::nullopt;
}

const std::vector<PromptSpec>& preset_prompts() {
  static const std::vector<PromptSpec> presets{
      {"explanation", PromptCategory::Explanation,
       "Explain quantum computing in simple terms. Cover what qubits are, how superposition "
       "and entanglement differ from classical bits, and what kinds of problems quantum "
       "computers are expected to solve better than classical ones."},
      {"code-generation", PromptCategory::CodeGen,
       "Write a Python function that sorts a list of integers using bubble sort. Include "
       "an early exit when a pass makes no swaps, a docstring, and a short example of "
       "calling the function."},
      {"summarization", PromptCategory::Summarization,
       "Summarize the core concepts of machine learning in one short paragraph: supervised "
       "and unsupervised learning, training and test data, and overfitting."},
      {"long-form", PromptCategory::LongForm,
       "Plan a detailed five-day travel itinerary for a first-time visitor to Tokyo. For "
       "each day list morning, afternoon and evening activities, neighbourhoods to visit, "
       "food to try, and practical transport tips."},
      {"analysis", PromptCategory::Analysis,
       "Write an analysis of the advantages and disadvantages of renewable energy sources "
       "such as solar, wind and hydroelectric power compared with fossil fuels. Consider "
       "cost, reliability, environmental impact and grid integration."},
  };
  return presets;
}

std::optional<PromptSpec> find_preset(std::string_view id) {
  for (const auto& p : preset_prompts()) {
    if (p.id == id) {
      return p;
    }
  }
  return std::nullopt;
}

std::string_view to_string(QuantFamily family) {
  switch (family) {
    case QuantFamily::Q2: return "Q2";
    case QuantFamily::Q3: return "Q3";
    case QuantFamily::Q4: return "Q4";
    case QuantFamily::Q5: return "Q5";
    case QuantFamily::Q6: return "Q6";
    case QuantFamily::Q8: return "Q8";
    case QuantFamily::FP16: return "FP16";
    case QuantFamily::FP32: return "FP32";
    case QuantFamily::INT4: return "INT4";
    case QuantFamily::INT8: return "INT8";
    case QuantFamily::Unknown: break;
  }
  return "Unknown";
}

std::optional<QuantFamily> parse_quant_family(std::string_view text) {
  for (auto f : {QuantFamily::Q2, QuantFamily::Q3, QuantFamily::Q4, QuantFamily::Q5,
                 QuantFamily::Q6, QuantFamily::Q8, QuantFamily::FP16, QuantFamily::FP32,
                 QuantFamily::INT4, QuantFamily::INT8, QuantFamily::Unknown}) {
    if (to_string(f) == text) {
      return f;
    }
  }
  return std::nullopt;
}

QuantLabel match_quantization(std::string_view text) {
  static const std::regex pattern(
      R"((q[2-8](?:_[k0-9_ms]+)?|int(?:4|8)|fp(?:16|32)|f16|(?:4|8)bit)(?![a-z0-9]))",
      std::regex::icase | std::regex::ECMAScript | std::regex::optimize);

  const std::string s(text);
  // Rightmost tag wins.
  for (std::size_t pos = s.size(); pos-- > 0;) {
    if (pos > 0 && is_alnum(s[pos - 1])) {
      continue;
    }
    std::smatch m;
    if (std::regex_search(s.cbegin() + static_cast<std::ptrdiff_t>(pos), s.cend(), m, pattern,
                          std::regex_constants::match_continuous)) {
      std::string raw = m.str(1);
      while (!raw.empty() && raw.back() == '_') {
        raw.pop_back();
      }
      return QuantLabel{raw, family_from_tag(raw)};
    }
  }
  return QuantLabel{};
}

QuantLabel detect_quantization(std::string_view model_name,
                               std::optional<std::string_view> platform_metadata) {
  if (model_name.empty()) {
    throw std::invalid_argument("model name must not be empty");
  }
  auto label = match_quantization(model_name);
  if (label.family == QuantFamily::Unknown && label.raw.empty() && platform_metadata) {
    label = match_quantization(*platform_metadata);
  }
  return label;
}

std::int64_t estimate_tokens(std::string_view text) {
  std::int64_t code_points = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) {
      ++code_points;
    }
  }
  return (code_points + 3) / 4;
}

std::string_view to_string(ApiPlatform platform) {
  return platform == ApiPlatform::Ollama ? "ollama" : "openai-compatible";
}

std::optional<ApiPlatform> parse_api_platform(std::string_view text) {
  if (text == "ollama") {
    return ApiPlatform::Ollama;
  }
  if (text == "openai-compatible" || text == "openai") {
    return ApiPlatform::OpenAICompatible;
  }
  return std::nullopt;
}

void validate(const BenchmarkResult& r) {
  if (r.model.empty()) {
    throw InvariantViolation("result has no model");
  }
  if (r.prompt_hash.size() != 64 ||
      !std::all_of(r.prompt_hash.begin(), r.prompt_hash.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
      })) {
    throw InvariantViolation("prompt_hash must be 64 lowercase hex characters");
  }
  if (r.tokens < 0) {
    throw InvariantViolation("tokens must be >= 0");
  }
  if (!(r.duration_s > 0.0) || !std::isfinite(r.duration_s)) {
    throw InvariantViolation("duration_s must be > 0");
  }
  if (!(r.duration_total_s >= 0.0)) {
    throw InvariantViolation("duration_total_s must be >= 0");
  }
  if (!(r.energy_wh >= 0.0) || !std::isfinite(r.energy_wh)) {
    throw InvariantViolation("energy_wh must be >= 0");
  }
  const double expected_speed = static_cast<double>(r.tokens) / r.duration_s;
  if (!close_rel(r.tokens_per_s, expected_speed, 1e-9) &&
      !(r.tokens == 0 && r.tokens_per_s == 0.0)) {
    throw InvariantViolation("tokens_per_s does not equal tokens / duration_s");
  }
  if (r.tokens == 0) {
    if (r.wh_per_token != 0.0) {
      throw InvariantViolation("wh_per_token must be 0 when tokens is 0");
    }
  } else if (!close_rel(r.wh_per_token * static_cast<double>(r.tokens), r.energy_wh, 1e-9) &&
             !(r.energy_wh == 0.0 && r.wh_per_token == 0.0)) {
    throw InvariantViolation("wh_per_token x tokens does not equal energy_wh");
  }
  if (r.quantization.family != family_from_tag(r.quantization.raw) &&
      !r.quantization.raw.empty()) {
    throw InvariantViolation("quantization family does not match its raw tag");
  }
  validate(r.quality);
}

DerivedMetrics derive_metrics(double energy_wh, std::int64_t tokens, double duration_s) {
  if (!(duration_s > 0.0)) {
    throw std::invalid_argument("duration_s must be > 0");
  }
  if (tokens < 0) {
    throw std::invalid_argument("tokens must be >= 0");
  }
  DerivedMetrics m;
  m.tokens_per_s = static_cast<double>(tokens) / duration_s;
  m.wh_per_token = tokens == 0 ? 0.0 : energy_wh / static_cast<double>(tokens);
  return m;
}

std::vector<ModelAggregate> aggregate_results(std::span<const BenchmarkResult> results) {
  std::vector<ModelAggregate> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : results) {
    auto [it, inserted] = index.try_emplace(r.model, out.size());
    if (inserted) {
      ModelAggregate a;
      a.model = r.model;
      a.min_tokens = r.tokens;
      a.max_tokens = r.tokens;
      out.push_back(a);
    }
    auto& a = out[it->second];
    ++a.count;
    a.mean_energy_wh += r.energy_wh;
    a.mean_tokens_per_s += r.tokens_per_s;
    a.mean_wh_per_token += r.wh_per_token;
    a.mean_quality += r.quality.value;
    a.min_tokens = std::min(a.min_tokens, r.tokens);
    a.max_tokens = std::max(a.max_tokens, r.tokens);
  }
  for (auto& a : out) {
    const auto n = static_cast<double>(a.count);
    a.mean_energy_wh /= n;
    a.mean_tokens_per_s /= n;
    a.mean_wh_per_token /= n;
    a.mean_quality /= n;
  }
  return out;
}

}  // namespace envirollm
