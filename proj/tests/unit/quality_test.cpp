#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "envirollm/errors.hpp"
#include "envirollm/quality.hpp"
#include "mock_server.hpp"

namespace envirollm {
namespace {

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(ENVIROLLM_TEST_DATA) + "/heuristic/" + name, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

TEST(JudgePrompt, ContainsCriteriaAndResponse) {
  const std::string response = "  Qubits can be 0 and 1 at once.\n\n{not a template}";
  const auto prompt = build_judge_prompt("Explain quantum computing", response);
  for (const char* phrase : {"accuracy (factual correctness)", "completeness (coverage of key points)",
                             "clarity (ease of understanding)", "relevance (staying on topic)"}) {
    EXPECT_NE(prompt.find(phrase), std::string::npos) << phrase;
  }
  EXPECT_NE(prompt.find(response), std::string::npos);
  EXPECT_NE(prompt.find("Explain quantum computing"), std::string::npos);
  EXPECT_EQ(prompt, build_judge_prompt("Explain quantum computing", response));
}

TEST(ParseJudgeReply, Examples) {
  EXPECT_EQ(parse_judge_reply("Score: 95"), 95);
  EXPECT_EQ(parse_judge_reply("87/100 overall"), 87);
  EXPECT_EQ(parse_judge_reply("0"), 0);
  EXPECT_EQ(parse_judge_reply("100/100"), 100);
  EXPECT_EQ(parse_judge_reply("I'd give it 250, no wait, 90"), 90);
  EXPECT_EQ(parse_judge_reply("score -5 then 40"), 40);
  EXPECT_EQ(parse_judge_reply("1000 then 070"), 70);
  EXPECT_THROW(parse_judge_reply("excellent work"), UnparseableJudgeReply);
  EXPECT_THROW(parse_judge_reply(""), UnparseableJudgeReply);
  EXPECT_THROW(parse_judge_reply("101 and 999"), UnparseableJudgeReply);
}

TEST(ParseJudgeReply, ExhaustiveAcceptedForms) {
  for (int n = 0; n <= 100; ++n) {
    const auto s = std::to_string(n);
    ASSERT_EQ(parse_judge_reply(s), n);
    ASSERT_EQ(parse_judge_reply("Score: " + s), n);
    ASSERT_EQ(parse_judge_reply(s + "/100"), n);
  }
}

TEST(HeuristicScore, EmptyResponse) {
  const auto q = heuristic_score("p", "");
  EXPECT_EQ(q.value, 0);
  EXPECT_EQ(q.method, QualityMethod::Heuristic);
  ASSERT_TRUE(q.subscores.has_value());
  EXPECT_EQ(*q.subscores, (QualitySubscores{0, 0, 0, 0}));
  EXPECT_NO_THROW(validate(q));
}

TEST(HeuristicScore, RepeatedWord) {
  std::string text;
  for (int i = 0; i < 500; ++i) {
    text += "word ";
  }
  const auto q = heuristic_score("p", text);
  EXPECT_EQ(q.subscores->diversity, 0);
  EXPECT_EQ(q.subscores->completeness, 25);
}

// Expected subscores produced by tests/oracles/heuristic_oracle.py over
// tests/data/heuristic/*.
struct Golden {
  const char* file;
  QualitySubscores subscores;
  int value;
};

class HeuristicGoldenTest : public ::testing::TestWithParam<Golden> {};

TEST_P(HeuristicGoldenTest, MatchesReferenceImplementation) {
  const auto& g = GetParam();
  const auto q = heuristic_score("prompt", read_fixture(g.file));
  ASSERT_TRUE(q.subscores.has_value());
  EXPECT_EQ(*q.subscores, g.subscores) << g.file;
  EXPECT_EQ(q.value, g.value) << g.file;
}

INSTANTIATE_TEST_SUITE_P(Fixtures, HeuristicGoldenTest,
                         ::testing::Values(Golden{"answer_300.txt", {25, 17, 25, 19}, 86},
                                           Golden{"code.md", {3, 20, 8, 13}, 44},
                                           Golden{"empty.txt", {0, 0, 0, 0}, 0},
                                           Golden{"listy.md", {3, 22, 9, 19}, 53},
                                           Golden{"long_3000.txt", {25, 8, 13, 13}, 59},
                                           Golden{"short.txt", {0, 25, 1, 6}, 32},
                                           Golden{"unicode.txt", {2, 19, 5, 6}, 32},
                                           Golden{"word_x500.txt", {25, 0, 25, 0}, 50}));

TEST(HeuristicScore, LongStructuredAnswerScoresHigh) {
  EXPECT_GE(heuristic_score("p", read_fixture("answer_300.txt")).value, 75);
}

TEST(HeuristicScore, FuzzBoundsAndDeterminism) {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> len(0, 600);
  std::uniform_int_distribution<int> byte(0, 255);
  const std::string alphabet = "abc xyz.\n\n#-*1) ```!?\t";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int i = 0; i < 2000; ++i) {
    std::string s(static_cast<std::size_t>(len(rng)), ' ');
    const bool raw = i % 2 == 0;
    for (auto& c : s) {
      c = raw ? static_cast<char>(byte(rng)) : alphabet[pick(rng)];
    }
    const auto a = heuristic_score("p", s);
    ASSERT_GE(a.value, 0);
    ASSERT_LE(a.value, 100);
    ASSERT_EQ(a.subscores->sum(), a.value);
    ASSERT_EQ(a, heuristic_score("p", s));
  }
}

TEST(HeuristicScore, ConfigurableThresholds) {
  HeuristicConfig config;
  config.completeness_words = 2;
  EXPECT_EQ(heuristic_score("p", "two words", config).subscores->completeness, 25);
}

TEST(ValidateQuality, RejectsInconsistentScores) {
  EXPECT_THROW(validate(QualityScore{90, QualityMethod::Judge, "m", QualitySubscores{}}),
               InvariantViolation);
  EXPECT_THROW(validate(QualityScore{10, QualityMethod::Heuristic, std::nullopt, QualitySubscores{5, 0, 0, 0}}),
               InvariantViolation);
  EXPECT_THROW(validate(QualityScore{-1, QualityMethod::Judge, "m", std::nullopt}), InvariantViolation);
  EXPECT_NO_THROW(validate(QualityScore{95, QualityMethod::Judge, "m", std::nullopt}));
}

TEST(JudgeScore, UsesMockJudge) {
  testing::MockInferenceServer judge({{testing::judge_reply(95)}});
  JudgeSettings settings;
  settings.url = judge.url();
  const auto q = judge_score("Explain X", "X is Y.", settings);
  EXPECT_EQ(q.value, 95);
  EXPECT_EQ(q.method, QualityMethod::Judge);
  EXPECT_EQ(q.judge_model, "gemma3:1b");
  const auto requests = judge.requests();
  ASSERT_EQ(requests.size(), 1u);
  EXPECT_EQ(requests[0].model, "gemma3:1b");
}

TEST(JudgeScore, ProseReplyIsUnparseable) {
  testing::MockInferenceServer judge({{{"", "Looks great to me", 4, 0, std::nullopt}}});
  JudgeSettings settings;
  settings.url = judge.url();
  EXPECT_THROW(judge_score("p", "r", settings), UnparseableJudgeReply);
}

TEST(JudgeScore, EndpointDownIsUnavailable) {
  JudgeSettings settings;
  settings.url = "http://127.0.0.1:1";
  EXPECT_THROW(judge_score("p", "r", settings), JudgeUnavailable);
}

TEST(QualityMethod, Names) {
  EXPECT_EQ(to_string(QualityMethod::Judge), "judge");
  EXPECT_EQ(parse_quality_method("heuristic"), QualityMethod::Heuristic);
  EXPECT_FALSE(parse_quality_method("human").has_value());
}

}  // namespace
}  // namespace envirollm
