#include <cmath>

#include <gtest/gtest.h>

#include "envirollm/clock.hpp"
#include "envirollm/engine.hpp"
#include "envirollm/errors.hpp"
#include "envirollm/store.hpp"
#include "envirollm/telemetry.hpp"
#include "mock_server.hpp"

namespace envirollm {
namespace {

using testing::MockInferenceServer;
using testing::MockServerOptions;
using testing::ScriptedReply;

// 400% CPU on 8 cores and 50% GPU: 15 + 0.5*65 + 0.5*220 W.
constexpr double kScriptWatts = 157.5;

class EngineTest : public ::testing::Test {
 protected:
  EngineTest() : provider_(clock_, make_options()) {}

  static MockTelemetryProvider::Options make_options() {
    MockTelemetryProvider::Options o;
    o.processes = {{42, "ollama", "/usr/bin/ollama serve"}};
    o.script = parse_mock_script("0 400 1000000000 50 -\n");
    o.cores = 8;
    return o;
  }

  BenchmarkConfig config(bool judge = false) const {
    BenchmarkConfig c;
    c.sample_interval_s = 0.05;
    c.timeout_s = 10;
    c.judge.enabled = judge;
    return c;
  }

  SteadyClock clock_;
  MockTelemetryProvider provider_;
};

std::vector<PromptSpec> prompts(std::initializer_list<const char*> ids) {
  std::vector<PromptSpec> out;
  for (const auto* id : ids) {
    out.push_back(*find_preset(id));
  }
  return out;
}

TEST_F(EngineTest, SpeedUsesServerEvalDuration) {
  MockServerOptions o;
  o.replies = {{"", "An answer of some length.", 100, 20, 2000}};
  MockInferenceServer server(o);
  BenchmarkEngine engine(provider_, clock_, config());
  const std::vector<std::string> models{"llama3:8b"};
  const auto p = prompts({"explanation"});
  const auto out = engine.run_ollama(models, p, server.url());
  ASSERT_EQ(out.results.size(), 1u);
  ASSERT_TRUE(out.failures.empty());
  const auto& r = out.results[0];
  EXPECT_EQ(r.tokens, 100);
  EXPECT_FALSE(r.tokens_estimated);
  EXPECT_DOUBLE_EQ(r.duration_s, 2.0);
  EXPECT_DOUBLE_EQ(r.tokens_per_s, 50.0);
  EXPECT_GT(r.duration_total_s, 0.0);
  EXPECT_NEAR(r.energy_wh, kScriptWatts * r.duration_total_s / 3600.0, 1e-9);
  EXPECT_NEAR(r.wh_per_token, r.energy_wh / 100.0, 1e-15);
  EXPECT_EQ(r.platform, ApiPlatform::Ollama);
  EXPECT_EQ(r.quality.method, QualityMethod::Heuristic);
  EXPECT_EQ(r.prompt_hash, prompt_hash(p[0].text));
}

TEST_F(EngineTest, SpeedFromSummarizationFigures) {
  MockServerOptions o;
  o.replies = {{"", "x", 167, 0, 4260}};
  MockInferenceServer server(o);
  BenchmarkEngine engine(provider_, clock_, config());
  const std::vector<std::string> models{"m"};
  const auto out = engine.run_ollama(models, prompts({"summarization"}), server.url());
  ASSERT_EQ(out.results.size(), 1u);
  EXPECT_NEAR(out.results[0].tokens_per_s, 39.2, 0.05);
}

TEST_F(EngineTest, SweepsModelsTimesPromptsInOrder) {
  MockServerOptions o;
  o.replies = {{"", "Some response text here.", 12, 0, std::nullopt}};
  MockInferenceServer server(o);
  BenchmarkEngine engine(provider_, clock_, config());
  const std::vector<std::string> models{"llama3:8b-q4_0", "phi3:mini-fp16"};
  const auto p = prompts({"explanation", "analysis"});
  std::vector<std::size_t> progress;
  SweepObserver observer;
  observer.on_progress = [&](std::size_t done, std::size_t total) {
    EXPECT_EQ(total, 4u);
    progress.push_back(done);
  };
  const auto out = engine.run_ollama(models, p, server.url(), observer);
  ASSERT_EQ(out.results.size(), 4u);
  EXPECT_EQ(progress, (std::vector<std::size_t>{1, 2, 3, 4}));
  EXPECT_EQ(out.results[0].model, "llama3:8b-q4_0");
  EXPECT_EQ(out.results[3].model, "phi3:mini-fp16");
  EXPECT_EQ(out.results[0].prompt_hash, out.results[2].prompt_hash);
  EXPECT_NE(out.results[0].prompt_hash, out.results[1].prompt_hash);
  EXPECT_EQ(out.results[0].quantization.family, QuantFamily::Q4);
  EXPECT_EQ(out.results[3].quantization.family, QuantFamily::FP16);
  for (const auto& r : out.results) {
    EXPECT_LE(r.timestamp, out.results.back().timestamp);
  }
}

TEST_F(EngineTest, QuantizationFallsBackToMetadata) {
  MockServerOptions o;
  o.replies = {{"", "ok", 2, 0, std::nullopt}};
  o.quants = {{"llama3:8b", "Q5_K_M"}};
  MockInferenceServer server(o);
  BenchmarkEngine engine(provider_, clock_, config());
  const std::vector<std::string> models{"llama3:8b", "mistral"};
  const auto out = engine.run_ollama(models, prompts({"explanation"}), server.url());
  ASSERT_EQ(out.results.size(), 2u);
  EXPECT_EQ(out.results[0].quantization.raw, "Q5_K_M");
  EXPECT_EQ(out.results[0].quantization.family, QuantFamily::Q5);
  EXPECT_EQ(out.results[1].quantization.family, QuantFamily::Unknown);
}

TEST_F(EngineTest, MissingUsageIsEstimatedAndFlagged) {
  MockServerOptions o;
  o.replies = {{"", "abcdefghij", 0, 0, std::nullopt}};
  o.report_usage = false;
  MockInferenceServer server(o);
  BenchmarkEngine engine(provider_, clock_, config());
  const auto out = engine.run_openai(server.openai_url(), "local-model", prompts({"explanation"}));
  ASSERT_EQ(out.results.size(), 1u);
  const auto& r = out.results[0];
  EXPECT_TRUE(r.tokens_estimated);
  EXPECT_EQ(r.tokens, 3);
  EXPECT_EQ(r.platform, ApiPlatform::OpenAICompatible);
  EXPECT_DOUBLE_EQ(r.duration_s, r.duration_total_s);
}

TEST_F(EngineTest, PairFailuresDoNotAbortTheSweep) {
  MockServerOptions o;
  o.replies = {{"", "fine", 1, 0, std::nullopt}};
  o.models = {"real"};
  MockInferenceServer server(o);
  BenchmarkEngine engine(provider_, clock_, config());
  const std::vector<std::string> models{"ghost", "real"};
  std::vector<PairFailure> seen;
  SweepObserver observer;
  observer.on_failure = [&](const PairFailure& f) { seen.push_back(f); };
  const auto out = engine.run_ollama(models, prompts({"explanation"}), server.url(), observer);
  ASSERT_EQ(out.failures.size(), 1u);
  EXPECT_EQ(out.failures[0].model, "ghost");
  EXPECT_EQ(out.failures[0].prompt_id, "explanation");
  EXPECT_EQ(out.failures[0].kind, FailureKind::ModelNotFound);
  EXPECT_EQ(seen.size(), 1u);
  ASSERT_EQ(out.results.size(), 1u);
  EXPECT_EQ(out.results[0].model, "real");
}

TEST_F(EngineTest, ObserverExceptionBecomesFailure) {
  MockServerOptions o;
  o.replies = {{"", "fine", 1, 0, std::nullopt}};
  MockInferenceServer server(o);
  BenchmarkEngine engine(provider_, clock_, config());
  SweepObserver observer;
  observer.on_result = [](BenchmarkResult&) { throw StorageError("disk full", "/tmp/x.db"); };
  const std::vector<std::string> models{"m"};
  const auto out = engine.run_ollama(models, prompts({"explanation"}), server.url(), observer);
  EXPECT_TRUE(out.results.empty());
  ASSERT_EQ(out.failures.size(), 1u);
  EXPECT_NE(out.failures[0].message.find("disk full"), std::string::npos);
}

TEST_F(EngineTest, JudgeScoresAndFallsBack) {
  MockServerOptions o;
  o.replies = {testing::judge_reply(87), {"", "A reply.", 3, 0, std::nullopt}};
  MockInferenceServer server(o);
  auto c = config(true);
  c.judge.url = server.url();
  BenchmarkEngine engine(provider_, clock_, c);
  const std::vector<std::string> models{"m"};
  const auto out = engine.run_ollama(models, prompts({"explanation"}), server.url());
  ASSERT_EQ(out.results.size(), 1u);
  EXPECT_EQ(out.results[0].quality.value, 87);
  EXPECT_EQ(out.results[0].quality.method, QualityMethod::Judge);
  EXPECT_EQ(out.results[0].quality.judge_model, "gemma3:1b");

  MockServerOptions bad;
  bad.replies = {{"accuracy (factual correctness)", "no idea", 2, 0, std::nullopt},
                 {"", "A reply.", 3, 0, std::nullopt}};
  MockInferenceServer server2(bad);
  c.judge.url = server2.url();
  BenchmarkEngine engine2(provider_, clock_, c);
  const auto out2 = engine2.run_ollama(models, prompts({"explanation"}), server2.url());
  ASSERT_EQ(out2.results.size(), 1u);
  EXPECT_EQ(out2.results[0].quality.method, QualityMethod::Heuristic);
}

TEST_F(EngineTest, UnreachableJudgeIsTriedOnce) {
  MockServerOptions o;
  o.replies = {{"", "A reply.", 3, 0, std::nullopt}};
  MockInferenceServer server(o);
  auto c = config(true);
  c.judge.url = "http://127.0.0.1:1";
  BenchmarkEngine engine(provider_, clock_, c);
  const std::vector<std::string> models{"m"};
  const auto out = engine.run_ollama(models, prompts({"explanation", "analysis"}), server.url());
  ASSERT_EQ(out.results.size(), 2u);
  for (const auto& r : out.results) {
    EXPECT_EQ(r.quality.method, QualityMethod::Heuristic);
  }
}

TEST_F(EngineTest, PreflightErrors) {
  BenchmarkEngine engine(provider_, clock_, config());
  const std::vector<std::string> models{"m"};
  const std::vector<std::string> none;
  const std::vector<PromptSpec> no_prompts;
  EXPECT_THROW(engine.run_ollama(none, prompts({"explanation"}), "http://127.0.0.1:1"),
               std::invalid_argument);
  EXPECT_THROW(engine.run_ollama(models, no_prompts, "http://127.0.0.1:1"), std::invalid_argument);
  EXPECT_THROW(engine.run_ollama(models, prompts({"explanation"}), "http://127.0.0.1:1"),
               EndpointUnreachable);
  EXPECT_THROW(engine.run_openai("http://127.0.0.1:1/v1", "m", prompts({"explanation"})),
               EndpointUnreachable);
  BenchmarkConfig bad = config();
  bad.sample_interval_s = 0;
  EXPECT_THROW(BenchmarkEngine(provider_, clock_, bad), std::invalid_argument);
}

TEST_F(EngineTest, StopTokenEndsSweepEarly) {
  MockServerOptions o;
  o.replies = {{"", "ok", 1, 0, std::nullopt}};
  MockInferenceServer server(o);
  BenchmarkEngine engine(provider_, clock_, config());
  std::stop_source source;
  SweepObserver observer;
  observer.on_result = [&](BenchmarkResult&) { source.request_stop(); };
  const std::vector<std::string> models{"m"};
  const auto out = engine.run_ollama(models, prompts({"explanation", "analysis", "long-form"}),
                                     server.url(), observer, source.get_token());
  EXPECT_EQ(out.results.size(), 1u);
}

}  // namespace
}  // namespace envirollm
