#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace envirollm {

enum class QualityMethod { Judge, Heuristic };

std::string_view to_string(QualityMethod method);
std::optional<QualityMethod> parse_quality_method(std::string_view text);

struct QualitySubscores {
  int completeness = 0;
  int diversity = 0;
  int length = 0;
  int structure = 0;

  int sum() const noexcept { return completeness + diversity + length + structure; }
  bool operator==(const QualitySubscores&) const = default;
};

struct QualityScore {
  int value = 0;
  QualityMethod method = QualityMethod::Heuristic;
  std::optional<std::string> judge_model;
  /// Present exactly when method is Heuristic.
  std::optional<QualitySubscores> subscores;

  bool operator==(const QualityScore&) const = default;
};

/// Throws InvariantViolation when the score is out of range or the
/// subscores do not match the method.
void validate(const QualityScore& score);

/// Thresholds used by heuristic_score.
struct HeuristicConfig {
  double completeness_words = 150.0;
  double length_band_low = 50.0;
  double length_band_high = 2000.0;
  double length_zero = 4000.0;
};

/// Rubric prompt asking a judge model for a single 0-100 integer.
std::string build_judge_prompt(std::string_view task_prompt, std::string_view response);

/// First integer in [0, 100] in the reply, scanning left to right. Larger
/// numbers are skipped, not clamped. Throws UnparseableJudgeReply.
int parse_judge_reply(std::string_view reply);

/// Deterministic fallback score from four textual features, each worth
/// up to 25 points.
QualityScore heuristic_score(std::string_view task_prompt, std::string_view response,
                             const HeuristicConfig& config = {});

struct JudgeSettings {
  bool enabled = true;
  std::string model = "gemma3:1b";
  std::string url = "http://localhost:11434";
  double timeout_s = 120.0;
};

/// Scores a response with a judge model over the Ollama protocol at
/// temperature 0. Throws JudgeUnavailable or UnparseableJudgeReply.
QualityScore judge_score(std::string_view task_prompt, std::string_view response,
                         const JudgeSettings& judge);

}  // namespace envirollm
