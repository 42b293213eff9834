#include "envirollm/quality.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "envirollm/clients.hpp"
#include "envirollm/errors.hpp"

namespace envirollm {
namespace {

constexpr double kSubscoreMax = 25.0;

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) {
    words.push_back(std::move(current));
  }
  return words;
}

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

std::size_t sentence_count(std::string_view text) {
  std::size_t count = 0;
  bool has_word = false;
  for (unsigned char c : text) {
    if (c == '.' || c == '!' || c == '?') {
      if (has_word) {
        ++count;
      }
      has_word = false;
    } else if (is_word_byte(c)) {
      has_word = true;
    }
  }
  return count + (has_word ? 1 : 0);
}

// Number of blank-line separators; consecutive blank lines count once.
std::size_t paragraph_breaks(std::string_view text) {
  std::size_t breaks = 0;
  std::size_t newlines = 0;
  for (char c : text) {
    if (c == '\n') {
      ++newlines;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      continue;
    } else {
      if (newlines >= 2) {
        ++breaks;
      }
      newlines = 0;
    }
  }
  return breaks;
}

bool line_has_marker(std::string_view line) {
  if (line.find("```") != std::string_view::npos) {
    return true;
  }
  const auto start = line.find_first_not_of(" \t");
  if (start == std::string_view::npos) {
    return false;
  }
  line.remove_prefix(start);
  if (line.front() == '#') {
    return true;
  }
  if (line.size() >= 2 && (line[0] == '-' || line[0] == '*' || line[0] == '+') && line[1] == ' ') {
    return true;
  }
  std::size_t digits = 0;
  while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits])) != 0) {
    ++digits;
  }
  return digits > 0 && digits + 1 < line.size() && (line[digits] == '.' || line[digits] == ')') &&
         line[digits + 1] == ' ';
}

bool has_structure_marker(std::string_view text) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos
                                                                      : end - pos);
    if (line_has_marker(line)) {
      return true;
    }
    if (end == std::string_view::npos) {
      break;
    }
    pos = end + 1;
  }
  return false;
}

bool ends_with_terminal_punctuation(std::string_view text) {
  const auto last = text.find_last_not_of(" \t\r\n");
  if (last == std::string_view::npos) {
    return false;
  }
  const char c = text[last];
  return c == '.' || c == '!' || c == '?';
}

}  // namespace

std::string_view to_string(QualityMethod method) {
  return method == QualityMethod::Judge ? "judge" : "heuristic";
}

std::optional<QualityMethod> parse_quality_method(std::string_view text) {
  if (text == "judge") {
    return QualityMethod::Judge;
  }
  if (text == "heuristic") {
    return QualityMethod::Heuristic;
  }
  return std::nullopt;
}

void validate(const QualityScore& score) {
  if (score.value < 0 || score.value > 100) {
    throw InvariantViolation("quality value " + std::to_string(score.value) +
                             " outside [0, 100]");
  }
  const bool heuristic = score.method == QualityMethod::Heuristic;
  if (heuristic != score.subscores.has_value()) {
    throw InvariantViolation("quality subscores must be present exactly for heuristic scores");
  }
  if (score.subscores) {
    const auto& s = *score.subscores;
    for (int v : {s.completeness, s.diversity, s.length, s.structure}) {
      if (v < 0 || v > 25) {
        throw InvariantViolation("quality subscore outside [0, 25]");
      }
    }
    if (s.sum() != score.value) {
      throw InvariantViolation("quality subscores do not sum to the value");
    }
  }
}

std::string build_judge_prompt(std::string_view task_prompt, std::string_view response) {
  std::string out;
  out.reserve(task_prompt.size() + response.size() + 1024);
  out +=
      "You are an impartial evaluator. Rate the response below to the given task on a scale "
      "from 0 to 100.\n"
      "Consider these four criteria equally:\n"
      "1. accuracy (factual correctness)\n"
      "2. completeness (coverage of key points)\n"
      "3. clarity (ease of understanding)\n"
      "4. relevance (staying on topic)\n"
      "\n"
      "Answer with a single integer between 0 and 100 on the first line. You may add a short "
      "justification on the following lines.\n"
      "\n"
      "### Task\n";
  out += task_prompt;
  out += "\n\n### Response\n";
  out += response;
  out += "\n\n### Score (0-100)\n";
  return out;
}

int parse_judge_reply(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size()) {
    if (std::isdigit(static_cast<unsigned char>(reply[i])) == 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j])) != 0) {
      ++j;
    }
    const bool negative = i > 0 && reply[i - 1] == '-' &&
                          (i == 1 || std::isalnum(static_cast<unsigned char>(reply[i - 2])) == 0);
    const auto run = reply.substr(i, j - i);
    const auto significant = run.find_first_not_of('0');
    const auto digits = significant == std::string_view::npos ? 1 : run.size() - significant;
    if (!negative && digits <= 3) {
      int value = 0;
      std::from_chars(run.data(), run.data() + run.size(), value);
      if (value >= 0 && value <= 100) {
        return value;
      }
    }
    i = j;
  }
  throw UnparseableJudgeReply("no score between 0 and 100 in judge reply: \"" +
                              std::string(reply.substr(0, 80)) + "\"");
}

QualityScore heuristic_score(std::string_view /*task_prompt*/, std::string_view response,
                             const HeuristicConfig& config) {
  const auto words = words_of(response);
  const auto count = static_cast<double>(words.size());

  double completeness = 0.0;
  double diversity = 0.0;
  double length = 0.0;
  double structure = 0.0;

  if (!words.empty()) {
    completeness = kSubscoreMax * std::min(1.0, count / config.completeness_words);

    const std::unordered_set<std::string> distinct(words.begin(), words.end());
    diversity = kSubscoreMax * static_cast<double>(distinct.size()) / count;

    if (count < config.length_band_low) {
      length = kSubscoreMax * count / config.length_band_low;
    } else if (count <= config.length_band_high) {
      length = kSubscoreMax;
    } else if (count < config.length_zero) {
      length = kSubscoreMax * (config.length_zero - count) /
               (config.length_zero - config.length_band_high);
    }
  }

  int features = 0;
  features += sentence_count(response) >= 2 ? 1 : 0;
  features += paragraph_breaks(response) >= 2 ? 1 : 0;
  features += has_structure_marker(response) ? 1 : 0;
  features += ends_with_terminal_punctuation(response) ? 1 : 0;
  structure = kSubscoreMax * features / 4.0;

  QualitySubscores subs{round_half_up(completeness), round_half_up(diversity),
                        round_half_up(length), round_half_up(structure)};
  return QualityScore{subs.sum(), QualityMethod::Heuristic, std::nullopt, subs};
}

QualityScore judge_score(std::string_view task_prompt, std::string_view response,
                         const JudgeSettings& judge) {
  ClientOptions options;
  options.timeout_s = judge.timeout_s;
  options.temperature = 0.0;
  Completion reply;
  try {
    OllamaClient client(judge.url, options);
    reply = client.generate(judge.model, build_judge_prompt(task_prompt, response));
  } catch (const std::invalid_argument& e) {
    throw JudgeUnavailable(std::string("judge endpoint invalid: ") + e.what());
  } catch (const Error& e) {
    throw JudgeUnavailable(std::string("judge unavailable: ") + e.what());
  }
  const int value = parse_judge_reply(reply.text);
  return QualityScore{value, QualityMethod::Judge, judge.model, std::nullopt};
}

}  // namespace envirollm
