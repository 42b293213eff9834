#include "reference_fixtures.hpp"

#include <cstdio>

#include "envirollm/store.hpp"

namespace envirollm::testing {

const std::vector<CrossTaskRow>& cross_task_rows() {
  static const std::vector<CrossTaskRow> rows{
      {"gemma-3-1b", ApiPlatform::OpenAICompatible, "explanation", 0.410, 110.3, 0.000565, 95, 725},
      {"gemma-3-1b", ApiPlatform::OpenAICompatible, "code-generation", 0.348, 178.2, 0.000396, 95, 877},
      {"gemma-3-1b", ApiPlatform::OpenAICompatible, "summarization", 0.087, 141.1, 0.000522, 95, 167},
      {"gemma-3-1b", ApiPlatform::OpenAICompatible, "long-form", 0.493, 197.6, 0.000354, 75, 1393},
      {"gemma-3-1b", ApiPlatform::OpenAICompatible, "analysis", 0.450, 172.7, 0.000468, 75, 961},
      {"gemma3:1b", ApiPlatform::Ollama, "explanation", 0.457, 121.9, 0.000583, 75, 784},
      {"gemma3:1b", ApiPlatform::Ollama, "code-generation", 0.419, 186.8, 0.000365, 95, 1149},
      {"gemma3:1b", ApiPlatform::Ollama, "summarization", 0.113, 124.2, 0.000575, 95, 196},
      {"gemma3:1b", ApiPlatform::Ollama, "long-form", 0.520, 193.7, 0.000383, 75, 1356},
      {"gemma3:1b", ApiPlatform::Ollama, "analysis", 0.510, 189.1, 0.000392, 95, 1302},
      {"gemma-3n-e4b", ApiPlatform::OpenAICompatible, "explanation", 1.115, 43.2, 0.001697, 75, 657},
      {"gemma-3n-e4b", ApiPlatform::OpenAICompatible, "code-generation", 2.141, 43.5, 0.001810, 95, 1183},
      {"gemma-3n-e4b", ApiPlatform::OpenAICompatible, "summarization", 0.371, 39.8, 0.001863, 95, 199},
      {"gemma-3n-e4b", ApiPlatform::OpenAICompatible, "long-form", 3.830, 42.3, 0.001862, 95, 2057},
      {"gemma-3n-e4b", ApiPlatform::OpenAICompatible, "analysis", 2.257, 42.6, 0.001711, 75, 1319},
  };
  return rows;
}

const std::vector<PlatformRow>& platform_rows() {
  static const std::vector<PlatformRow> rows{
      {"gemma3:1b", 0.457, 6.43, 121.9, 0.000583, 75},
      {"gemma-3-1b", 0.410, 6.57, 110.3, 0.000565, 95},
  };
  return rows;
}

const std::vector<ArchitectureRow>& architecture_rows() {
  static const std::vector<ArchitectureRow> rows{
      {"gemma-3-1b", 0.358, 160.0, 0.000460, 87},
      {"gemma-3n-e4b", 1.943, 42.3, 0.001789, 87},
  };
  return rows;
}

ArchitectureRatios architecture_ratios() { return {5.4, 3.8, 3.9}; }

std::vector<BenchmarkResult> cross_task_results() {
  std::vector<BenchmarkResult> out;
  int minute = 0;
  for (const auto& row : cross_task_rows()) {
    BenchmarkResult r;
    char ts[48];
    std::snprintf(ts, sizeof ts, "2025-09-01T10:%02d:00.000Z", minute++);
    r.timestamp = ts;
    r.platform = row.platform;
    r.endpoint_url = row.platform == ApiPlatform::Ollama ? "http://localhost:11434"
                                                         : "http://localhost:1234/v1";
    r.model = row.model;
    r.quantization = {"Q4", QuantFamily::Q4};
    const auto preset = find_preset(row.task);
    r.prompt_text = preset->text;
    r.prompt_hash = prompt_hash(r.prompt_text);
    r.response_text = "Response of " + row.model + " to the " + row.task + " task.";
    r.tokens = row.tokens;
    r.duration_s = static_cast<double>(row.tokens) / row.speed_tok_s;
    r.duration_total_s = r.duration_s + 0.25;
    r.energy_wh = row.energy_wh;
    const auto d = derive_metrics(r.energy_wh, r.tokens, r.duration_s);
    r.tokens_per_s = d.tokens_per_s;
    r.wh_per_token = d.wh_per_token;
    r.quality = {row.quality, QualityMethod::Judge, std::string("gemma3:1b"), std::nullopt};
    out.push_back(std::move(r));
  }
  out[0].response_text = "a,\"b\"\nc, and \"quoted\" text,\r\nwith CRLF";
  return out;
}

}  // namespace envirollm::testing
