#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "envirollm/bench.hpp"

struct sqlite3;

namespace envirollm {

/// Trims, collapses internal whitespace runs to one space.
std::string normalize_prompt(std::string_view text);

/// Lowercase hex SHA-256 of the normalized prompt.
std::string prompt_hash(std::string_view text);

struct ResultFilter {
  std::optional<std::string> model;
  std::optional<ApiPlatform> platform;
  std::optional<std::string> since;  // inclusive ISO-8601 bounds
  std::optional<std::string> until;
};

struct BenchmarkGroup {
  std::string prompt_hash;
  std::string prompt_text;
  std::vector<BenchmarkResult> results;  // timestamp ascending
};

struct CleanAll {};
struct CleanOlderThan {
  std::string timestamp;
};
struct CleanModel {
  std::string model;
};
using CleanScope = std::variant<CleanAll, CleanOlderThan, CleanModel>;

/// CSV column names in export order.
const std::vector<std::string_view>& csv_columns();

/// Writes header plus one RFC-4180 row per result. Returns rows written.
std::size_t write_results_csv(std::ostream& out, const std::vector<BenchmarkResult>& results);

/// Reads a file produced by write_results_csv. Heuristic subscores are not
/// part of the CSV and come back empty. Throws std::invalid_argument.
std::vector<BenchmarkResult> read_results_csv(std::istream& in);

/// Default database location: $XDG_DATA_HOME (or ~/.local/share)
/// /envirollm/benchmarks.db.
std::filesystem::path default_database_path();

/// Single-file SQLite store. One writer at a time, concurrent readers; all
/// calls are serialized on one connection.
class ResultStore {
 public:
  /// Opens or creates the database, creating parent directories.
  /// Throws StorageError.
  explicit ResultStore(const std::filesystem::path& path);
  ~ResultStore();

  ResultStore(const ResultStore&) = delete;
  ResultStore& operator=(const ResultStore&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

  /// Validates then inserts; returns the new id. Throws InvariantViolation
  /// or StorageError.
  std::int64_t save(const BenchmarkResult& result);

  std::optional<BenchmarkResult> load(std::int64_t id) const;

  /// Results ordered by timestamp then id.
  std::vector<BenchmarkResult> list(const ResultFilter& filter = {}) const;

  /// Groups by prompt_hash, most recently active group first.
  std::vector<BenchmarkGroup> list_grouped(const ResultFilter& filter = {}) const;

  std::size_t count() const;

  /// Throws StorageError.
  std::size_t export_csv(const std::filesystem::path& destination) const;
  std::size_t export_csv(std::ostream& out) const;

  std::size_t clean(const CleanScope& scope);

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  sqlite3* db_ = nullptr;
};

}  // namespace envirollm
