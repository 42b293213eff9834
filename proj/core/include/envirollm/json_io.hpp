#pragma once

#include <nlohmann/json.hpp>

#include "envirollm/advisor.hpp"
#include "envirollm/bench.hpp"
#include "envirollm/engine.hpp"
#include "envirollm/sampler.hpp"
#include "envirollm/service.hpp"
#include "envirollm/store.hpp"

namespace envirollm {

// Result objects use the CSV column names as keys.
void to_json(nlohmann::json& j, const BenchmarkResult& result);
void from_json(const nlohmann::json& j, BenchmarkResult& result);

void to_json(nlohmann::json& j, const BenchmarkGroup& group);
void to_json(nlohmann::json& j, const MetricsSnapshot& snapshot);
void to_json(nlohmann::json& j, const HardwareProfile& profile);
void to_json(nlohmann::json& j, const Recommendation& recommendation);
void to_json(nlohmann::json& j, const PairFailure& failure);
void to_json(nlohmann::json& j, const BenchmarkJob& job);
void to_json(nlohmann::json& j, const ModelAggregate& aggregate);

/// Live-feed payload: the snapshot plus its estimated platform power.
nlohmann::json live_event(const MetricsSnapshot& snapshot, double estimated_watts);

}  // namespace envirollm
