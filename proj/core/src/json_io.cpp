#include "envirollm/json_io.hpp"

#include "envirollm/energy.hpp"

namespace envirollm {

using nlohmann::json;

void to_json(json& j, const BenchmarkResult& r) {
  j = json{{"id", r.id},
           {"timestamp", r.timestamp},
           {"platform", to_string(r.platform)},
           {"endpoint_url", r.endpoint_url},
           {"model", r.model},
           {"quantization_raw", r.quantization.raw},
           {"quantization_family", to_string(r.quantization.family)},
           {"prompt_hash", r.prompt_hash},
           {"prompt_text", r.prompt_text},
           {"tokens", r.tokens},
           {"tokens_estimated", r.tokens_estimated},
           {"duration_s", r.duration_s},
           {"duration_total_s", r.duration_total_s},
           {"tokens_per_s", r.tokens_per_s},
           {"energy_wh", r.energy_wh},
           {"wh_per_token", r.wh_per_token},
           {"quality_score", r.quality.value},
           {"quality_method", to_string(r.quality.method)},
           {"judge_model", r.quality.judge_model ? json(*r.quality.judge_model) : json(nullptr)},
           {"response_text", r.response_text}};
  if (r.quality.subscores) {
    const auto& s = *r.quality.subscores;
    j["quality_subscores"] = {{"completeness", s.completeness},
                              {"diversity", s.diversity},
                              {"length", s.length},
                              {"structure", s.structure}};
  }
}

void from_json(const json& j, BenchmarkResult& r) {
  r.id = j.value("id", std::int64_t{0});
  r.timestamp = j.at("timestamp").get<std::string>();
  r.platform = parse_api_platform(j.at("platform").get<std::string>()).value_or(ApiPlatform::Ollama);
  r.endpoint_url = j.at("endpoint_url").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.quantization.raw = j.at("quantization_raw").get<std::string>();
  r.quantization.family =
      parse_quant_family(j.at("quantization_family").get<std::string>()).value_or(QuantFamily::Unknown);
  r.prompt_hash = j.at("prompt_hash").get<std::string>();
  r.prompt_text = j.at("prompt_text").get<std::string>();
  r.tokens = j.at("tokens").get<std::int64_t>();
  r.tokens_estimated = j.at("tokens_estimated").get<bool>();
  r.duration_s = j.at("duration_s").get<double>();
  r.duration_total_s = j.at("duration_total_s").get<double>();
  r.tokens_per_s = j.at("tokens_per_s").get<double>();
  r.energy_wh = j.at("energy_wh").get<double>();
  r.wh_per_token = j.at("wh_per_token").get<double>();
  r.quality.value = j.at("quality_score").get<int>();
  r.quality.method =
      parse_quality_method(j.at("quality_method").get<std::string>()).value_or(QualityMethod::Heuristic);
  r.quality.judge_model.reset();
  if (j.contains("judge_model") && j["judge_model"].is_string()) {
    r.quality.judge_model = j["judge_model"].get<std::string>();
  }
  r.quality.subscores.reset();
  if (j.contains("quality_subscores")) {
    const auto& s = j["quality_subscores"];
    r.quality.subscores = QualitySubscores{s.at("completeness").get<int>(), s.at("diversity").get<int>(),
                                           s.at("length").get<int>(), s.at("structure").get<int>()};
  }
  r.response_text = j.at("response_text").get<std::string>();
}

void to_json(json& j, const BenchmarkGroup& g) {
  j = json{{"prompt_hash", g.prompt_hash}, {"prompt_text", g.prompt_text}, {"results", g.results}};
}

void to_json(json& j, const MetricsSnapshot& s) {
  json procs = json::array();
  for (const auto& p : s.per_process) {
    procs.push_back({{"pid", p.pid},
                     {"name", p.name},
                     {"platform", to_string(p.platform)},
                     {"cpu_percent", p.cpu_percent},
                     {"rss_bytes", p.rss_bytes}});
  }
  j = json{{"monotonic_s", s.monotonic_s},
           {"timestamp", s.wall_time},
           {"logical_cores", s.logical_cores},
           {"per_process", procs},
           {"gpu", nullptr},
           {"warnings", s.warnings}};
  if (s.gpu) {
    j["gpu"] = {{"utilization_percent", s.gpu->utilization_percent},
                {"memory_used_bytes", s.gpu->memory_used_bytes},
                {"memory_total_bytes", s.gpu->memory_total_bytes},
                {"temperature_celsius", s.gpu->temperature_celsius},
                {"power_watts", s.gpu->power_watts ? json(*s.gpu->power_watts) : json(nullptr)}};
  }
}

void to_json(json& j, const HardwareProfile& p) {
  j = json{{"total_ram_bytes", p.total_ram_bytes},
           {"available_ram_bytes", p.available_ram_bytes},
           {"logical_cores", p.logical_cores},
           {"gpu", nullptr}};
  if (p.gpu) {
    j["gpu"] = {{"name", p.gpu->name},
                {"vram_total_bytes", p.gpu->vram_total_bytes},
                {"vram_free_bytes", p.gpu->vram_free_bytes}};
  }
}

void to_json(json& j, const Recommendation& r) {
  j = json{{"max_params_billions", r.max_params_billions},
           {"suggested_quant", to_string(r.suggested_quant)},
           {"rationale", r.rationale},
           {"confidence", r.confidence}};
}

void to_json(json& j, const PairFailure& f) {
  j = json{{"model", f.model}, {"prompt_id", f.prompt_id}, {"kind", to_string(f.kind)},
           {"message", f.message}};
}

void to_json(json& j, const BenchmarkJob& job) {
  j = json{{"job_id", job.job_id},
           {"state", to_string(job.state)},
           {"progress", {{"completed_pairs", job.completed_pairs}, {"total_pairs", job.total_pairs}}},
           {"results_so_far", job.results_so_far},
           {"failures", job.failures},
           {"error", job.error ? json(*job.error) : json(nullptr)}};
}

void to_json(json& j, const ModelAggregate& a) {
  j = json{{"model", a.model},
           {"count", a.count},
           {"mean_energy_wh", a.mean_energy_wh},
           {"mean_tokens_per_s", a.mean_tokens_per_s},
           {"mean_wh_per_token", a.mean_wh_per_token},
           {"mean_quality", a.mean_quality},
           {"min_tokens", a.min_tokens},
           {"max_tokens", a.max_tokens}};
}

json live_event(const MetricsSnapshot& snapshot, double estimated_watts) {
  json j = snapshot;
  j["estimated_watts"] = estimated_watts;
  return j;
}

}  // namespace envirollm
