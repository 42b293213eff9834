#include <gtest/gtest.h>

#include "envirollm/advisor.hpp"
#include "envirollm/clock.hpp"
#include "envirollm/errors.hpp"
#include "envirollm/telemetry.hpp"

namespace envirollm {
namespace {

constexpr std::uint64_t GB = 1'000'000'000ULL;

HardwareProfile ram_only(std::uint64_t available, std::uint64_t total = 64 * GB) {
  HardwareProfile p;
  p.total_ram_bytes = total;
  p.available_ram_bytes = available;
  p.logical_cores = 8;
  return p;
}

TEST(Advisor, EightGigabytesOfRam) {
  const auto recs = recommend(ram_only(8 * GB));
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_DOUBLE_EQ(recs[0].max_params_billions, 7.6);
  EXPECT_EQ(recs[0].suggested_quant, QuantFamily::Q4);
  EXPECT_DOUBLE_EQ(recs[1].max_params_billions, 4.4);
  EXPECT_EQ(recs[1].suggested_quant, QuantFamily::Q8);
  EXPECT_DOUBLE_EQ(recs[2].max_params_billions, 2.4);
  EXPECT_EQ(recs[2].suggested_quant, QuantFamily::FP16);
  EXPECT_NE(recs[0].rationale.find("system RAM"), std::string::npos);
  EXPECT_NE(recs[0].rationale.find("8.0 GB"), std::string::npos);
  EXPECT_EQ(recs[0].confidence, "threshold-based");
}

TEST(Advisor, TwoGigabytesDropsRowsBelowMinimum) {
  const auto recs = recommend(ram_only(2 * GB));
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_DOUBLE_EQ(recs[0].max_params_billions, 1.9);
  EXPECT_DOUBLE_EQ(recs[2].max_params_billions, 0.6);

  const auto tiny = recommend(ram_only(GB / 2));
  EXPECT_TRUE(tiny.empty());
}

TEST(Advisor, GpuBoundWhenVramIsSmaller) {
  auto p = ram_only(24 * GB, 32 * GB);
  p.gpu = GpuProfile{"RTX", 10 * GB, 8 * GB};
  const auto budget = binding_budget(p);
  EXPECT_TRUE(budget.gpu_bound);
  EXPECT_DOUBLE_EQ(budget.gigabytes, 6.4);
  const auto recs = recommend(p);
  ASSERT_FALSE(recs.empty());
  EXPECT_DOUBLE_EQ(recs[0].max_params_billions, 7.6);
  EXPECT_NE(recs[0].rationale.find("VRAM"), std::string::npos);

  p.gpu->vram_free_bytes = 40 * GB;
  p.gpu->vram_total_bytes = 48 * GB;
  EXPECT_FALSE(binding_budget(p).gpu_bound);
}

TEST(Advisor, MonotoneInMemoryAndAlwaysFits) {
  const AdvisorTable table;
  double previous = 0.0;
  for (std::uint64_t mb = 500; mb <= 128'000; mb += 250) {
    const auto p = ram_only(mb * 1'000'000ULL, 256 * GB);
    const auto recs = recommend(p, table);
    const double top = recs.empty() ? 0.0 : recs.front().max_params_billions;
    EXPECT_GE(top, previous) << mb;
    previous = top;
    const auto budget = binding_budget(p, table);
    for (const auto& r : recs) {
      double per_b = 0;
      for (const auto& q : table.quants) {
        if (q.family == r.suggested_quant) per_b = q.gb_per_billion_params;
      }
      EXPECT_LE(r.max_params_billions * per_b * (1 + table.overhead_fraction),
                budget.gigabytes + 1e-9);
    }
  }
}

TEST(Advisor, InvariantViolations) {
  auto p = ram_only(10 * GB, 8 * GB);
  EXPECT_THROW(recommend(p), InvariantViolation);
  p = ram_only(4 * GB);
  p.gpu = GpuProfile{"g", GB, 2 * GB};
  EXPECT_THROW(validate(p), InvariantViolation);
  p = ram_only(4 * GB);
  p.logical_cores = 0;
  EXPECT_THROW(validate(p), InvariantViolation);
}

TEST(Advisor, DetectHardwareFromProvider) {
  FakeClock clock;
  MockTelemetryProvider::Options o;
  o.memory = {16 * GB, 12 * GB};
  o.cores = 4;
  MockTelemetryProvider provider(clock, o);
  const auto p = detect_hardware(provider);
  EXPECT_EQ(p.total_ram_bytes, 16 * GB);
  EXPECT_EQ(p.available_ram_bytes, 12 * GB);
  EXPECT_EQ(p.logical_cores, 4u);
  ASSERT_TRUE(p.gpu.has_value());
  EXPECT_EQ(p.gpu->vram_free_bytes, 8 * GB);

  o.has_gpu = false;
  MockTelemetryProvider no_gpu(clock, o);
  EXPECT_FALSE(detect_hardware(no_gpu).gpu.has_value());
}

TEST(AdvisorTable, ParsesAndValidates) {
  const auto t = parse_advisor_table(
      R"({"usable_fraction":0.5,"quants":[{"family":"Q2","gb_per_billion_params":0.4}]})");
  EXPECT_DOUBLE_EQ(t.usable_fraction, 0.5);
  EXPECT_DOUBLE_EQ(t.overhead_fraction, 0.2);
  ASSERT_EQ(t.quants.size(), 1u);
  EXPECT_EQ(t.quants[0].family, QuantFamily::Q2);

  EXPECT_THROW(parse_advisor_table("{"), std::invalid_argument);
  EXPECT_THROW(parse_advisor_table(R"({"usable_fraction":0})"), std::invalid_argument);
  EXPECT_THROW(parse_advisor_table(R"({"quants":[]})"), std::invalid_argument);
  EXPECT_THROW(parse_advisor_table(R"({"quants":[{"family":"Q9","gb_per_billion_params":1}]})"),
               std::invalid_argument);
  EXPECT_THROW(parse_advisor_table(R"({"quants":[{"family":"Q4","gb_per_billion_params":0}]})"),
               std::invalid_argument);
}

TEST(AdvisorTable, BundledFileMatchesDefaults) {
  const auto t = load_advisor_table(ENVIROLLM_ADVISOR_TABLE);
  const AdvisorTable d;
  EXPECT_DOUBLE_EQ(t.usable_fraction, d.usable_fraction);
  EXPECT_DOUBLE_EQ(t.overhead_fraction, d.overhead_fraction);
  ASSERT_EQ(t.quants.size(), d.quants.size());
  for (std::size_t i = 0; i < t.quants.size(); ++i) {
    EXPECT_EQ(t.quants[i].family, d.quants[i].family);
    EXPECT_DOUBLE_EQ(t.quants[i].gb_per_billion_params, d.quants[i].gb_per_billion_params);
  }
  EXPECT_THROW(load_advisor_table("/nonexistent/table.json"), std::invalid_argument);
}

}  // namespace
}  // namespace envirollm
