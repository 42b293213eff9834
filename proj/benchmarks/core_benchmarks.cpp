#include <random>
#include <string>

#include <benchmark/benchmark.h>

#include "envirollm/bench.hpp"
#include "envirollm/energy.hpp"
#include "envirollm/quality.hpp"
#include "envirollm/store.hpp"

namespace {

using namespace envirollm;

PowerSeries random_series(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> watts(15.0, 300.0);
  std::uniform_real_distribution<double> step(0.5, 2.5);
  PowerSeries s;
  double t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s.points.push_back({t, watts(rng)});
    t += step(rng);
  }
  return s;
}

std::string random_text(std::size_t words) {
  static const char* vocab[] = {"energy", "token", "model", "the", "of", "a", "GPU", "inference",
                                "quantized", "llama", "## Heading", "- item", "1. step", "```"};
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(vocab) - 1);
  std::string text;
  for (std::size_t i = 0; i < words; ++i) {
    text += vocab[pick(rng)];
    text += (i % 17 == 16) ? '\n' : ' ';
  }
  return text;
}

void BM_IntegrateEnergy(benchmark::State& state) {
  const auto series = random_series(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate_energy(series));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IntegrateEnergy)->Arg(16)->Arg(1024)->Arg(65536);

void BM_ClipSeries(benchmark::State& state) {
  const auto series = random_series(static_cast<std::size_t>(state.range(0)));
  const double end = series.points.back().t;
  for (auto _ : state) {
    benchmark::DoNotOptimize(clip_series(series, end * 0.25, end * 0.75));
  }
}
BENCHMARK(BM_ClipSeries)->Arg(1024);

void BM_HeuristicScore(benchmark::State& state) {
  const auto text = random_text(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(heuristic_score("Explain quantum computing", text));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_HeuristicScore)->Arg(50)->Arg(500)->Arg(5000);

void BM_ParseJudgeReply(benchmark::State& state) {
  const std::string reply = "After weighing accuracy and clarity I would rate this Score: 87/100.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_judge_reply(reply));
  }
}
BENCHMARK(BM_ParseJudgeReply);

void BM_PromptHash(benchmark::State& state) {
  const auto text = random_text(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(prompt_hash(text));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_PromptHash)->Arg(20)->Arg(2000);

void BM_DetectQuantization(benchmark::State& state) {
  const std::string names[] = {"llama3:8b-instruct-q4_K_M", "phi3:mini", "mistral-7b-fp16",
                               "qwen2.5-7b-instruct-mlx-4bit", "gemma3:1b"};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect_quantization(names[i++ % std::size(names)]));
  }
}
BENCHMARK(BM_DetectQuantization);

}  // namespace
BENCHMARK_MAIN();
