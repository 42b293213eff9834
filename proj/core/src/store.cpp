#include "envirollm/store.hpp"

#include <openssl/evp.h>
#include <sqlite3.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "envirollm/errors.hpp"

namespace envirollm {
namespace {

namespace fs = std::filesystem;

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS results (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  timestamp TEXT NOT NULL,
  platform TEXT NOT NULL,
  endpoint_url TEXT NOT NULL,
  model TEXT NOT NULL,
  quantization_raw TEXT NOT NULL,
  quantization_family TEXT NOT NULL,
  prompt_hash TEXT NOT NULL,
  prompt_text TEXT NOT NULL,
  tokens INTEGER NOT NULL,
  tokens_estimated INTEGER NOT NULL,
  duration_s REAL NOT NULL,
  duration_total_s REAL NOT NULL,
  tokens_per_s REAL NOT NULL,
  energy_wh REAL NOT NULL,
  wh_per_token REAL NOT NULL,
  quality_score INTEGER NOT NULL,
  quality_method TEXT NOT NULL,
  judge_model TEXT,
  response_text TEXT NOT NULL,
  quality_completeness INTEGER,
  quality_diversity INTEGER,
  quality_length INTEGER,
  quality_structure INTEGER
);
CREATE INDEX IF NOT EXISTS idx_results_prompt_time ON results(prompt_hash, timestamp);
)sql";

constexpr const char* kSelectColumns =
    "SELECT id, timestamp, platform, endpoint_url, model, quantization_raw, quantization_family, "
    "prompt_hash, prompt_text, tokens, tokens_estimated, duration_s, duration_total_s, "
    "tokens_per_s, energy_wh, wh_per_token, quality_score, quality_method, judge_model, "
    "response_text, quality_completeness, quality_diversity, quality_length, quality_structure "
    "FROM results";

class Statement {
 public:
  Statement(sqlite3* db, const std::string& sql, const fs::path& path) : path_(path) {
    if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK) {
      throw StorageError(std::string("prepare failed: ") + sqlite3_errmsg(db), path_.string());
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  void bind(int i, const std::string& v) {
    sqlite3_bind_text(stmt_, i, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
  }
  void bind(int i, std::int64_t v) { sqlite3_bind_int64(stmt_, i, v); }
  void bind(int i, double v) { sqlite3_bind_double(stmt_, i, v); }
  void bind_null(int i) { sqlite3_bind_null(stmt_, i); }

  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) {
      return true;
    }
    if (rc == SQLITE_DONE) {
      return false;
    }
    throw StorageError(std::string("sqlite step failed: ") +
                           sqlite3_errmsg(sqlite3_db_handle(stmt_)),
                       path_.string());
  }

  std::string text(int i) const {
    const auto* p = sqlite3_column_text(stmt_, i);
    return p == nullptr ? std::string{}
                        : std::string(reinterpret_cast<const char*>(p),
                                      static_cast<std::size_t>(sqlite3_column_bytes(stmt_, i)));
  }
  std::int64_t integer(int i) const { return sqlite3_column_int64(stmt_, i); }
  double real(int i) const { return sqlite3_column_double(stmt_, i); }
  bool is_null(int i) const { return sqlite3_column_type(stmt_, i) == SQLITE_NULL; }

 private:
  sqlite3_stmt* stmt_ = nullptr;
  fs::path path_;
};

BenchmarkResult read_row(const Statement& s) {
  BenchmarkResult r;
  r.id = s.integer(0);
  r.timestamp = s.text(1);
  r.platform = parse_api_platform(s.text(2)).value_or(ApiPlatform::Ollama);
  r.endpoint_url = s.text(3);
  r.model = s.text(4);
  r.quantization.raw = s.text(5);
  r.quantization.family = parse_quant_family(s.text(6)).value_or(QuantFamily::Unknown);
  r.prompt_hash = s.text(7);
  r.prompt_text = s.text(8);
  r.tokens = s.integer(9);
  r.tokens_estimated = s.integer(10) != 0;
  r.duration_s = s.real(11);
  r.duration_total_s = s.real(12);
  r.tokens_per_s = s.real(13);
  r.energy_wh = s.real(14);
  r.wh_per_token = s.real(15);
  r.quality.value = static_cast<int>(s.integer(16));
  r.quality.method = parse_quality_method(s.text(17)).value_or(QualityMethod::Heuristic);
  if (!s.is_null(18)) {
    r.quality.judge_model = s.text(18);
  }
  r.response_text = s.text(19);
  if (!s.is_null(20)) {
    r.quality.subscores = QualitySubscores{
        static_cast<int>(s.integer(20)), static_cast<int>(s.integer(21)),
        static_cast<int>(s.integer(22)), static_cast<int>(s.integer(23))};
  }
  return r;
}

struct Where {
  std::string clause;
  std::vector<std::string> args;
};

Where where_for(const ResultFilter& f) {
  Where w;
  auto add = [&w](const std::string& cond, std::string arg) {
    w.clause += w.clause.empty() ? " WHERE " : " AND ";
    w.clause += cond;
    w.args.push_back(std::move(arg));
  };
  if (f.model) {
    add("model = ?", *f.model);
  }
  if (f.platform) {
    add("platform = ?", std::string(to_string(*f.platform)));
  }
  if (f.since) {
    add("timestamp >= ?", *f.since);
  }
  if (f.until) {
    add("timestamp <= ?", *f.until);
  }
  return w;
}

// ---- CSV -------------------------------------------------------------------

std::string csv_field(std::string_view v) {
  if (v.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(v);
  }
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& s, const char* column) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string("invalid number in column ") + column + ": " + s);
  }
  return v;
}

std::int64_t parse_int(const std::string& s, const char* column) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string("invalid integer in column ") + column + ": " + s);
  }
  return v;
}

// One RFC-4180 record; false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) {
    return false;
  }
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  for (;;) {
    const int ch = in.get();
    if (ch == std::char_traits<char>::eof()) {
      if (quoted) {
        throw std::invalid_argument("unterminated quoted CSV field");
      }
      fields.push_back(std::move(field));
      return true;
    }
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (c == '\r' && in.peek() == '\n') {
      continue;
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else {
      field += c;
    }
  }
}

}  // namespace

std::string normalize_prompt(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c) != 0) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(c);
  }
  return out;
}

std::string prompt_hash(std::string_view text) {
  const auto normalized = normalize_prompt(text);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(normalized.data(), normalized.size(), digest.data(), &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0x0f];
  }
  return hex;
}

const std::vector<std::string_view>& csv_columns() {
  static const std::vector<std::string_view> columns{
      "id",           "timestamp",        "platform",         "endpoint_url",
      "model",        "quantization_raw", "quantization_family", "prompt_hash",
      "prompt_text",  "tokens",           "tokens_estimated", "duration_s",
      "duration_total_s", "tokens_per_s", "energy_wh",        "wh_per_token",
      "quality_score", "quality_method",  "judge_model",      "response_text"};
  return columns;
}

std::size_t write_results_csv(std::ostream& out, const std::vector<BenchmarkResult>& results) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "," : "") << cols[i];
  }
  out << "\r\n";
  for (const auto& r : results) {
    const std::array<std::string, 20> row{
        std::to_string(r.id),
        csv_field(r.timestamp),
        std::string(to_string(r.platform)),
        csv_field(r.endpoint_url),
        csv_field(r.model),
        csv_field(r.quantization.raw),
        std::string(to_string(r.quantization.family)),
        r.prompt_hash,
        csv_field(r.prompt_text),
        std::to_string(r.tokens),
        r.tokens_estimated ? "true" : "false",
        format_double(r.duration_s),
        format_double(r.duration_total_s),
        format_double(r.tokens_per_s),
        format_double(r.energy_wh),
        format_double(r.wh_per_token),
        std::to_string(r.quality.value),
        std::string(to_string(r.quality.method)),
        csv_field(r.quality.judge_model.value_or("")),
        csv_field(r.response_text)};
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << row[i];
    }
    out << "\r\n";
  }
  return results.size();
}

std::vector<BenchmarkResult> read_results_csv(std::istream& in) {
  std::vector<std::string> fields;
  if (!read_record(in, fields)) {
    throw std::invalid_argument("CSV input is empty");
  }
  const auto& cols = csv_columns();
  if (fields.size() != cols.size() || !std::equal(fields.begin(), fields.end(), cols.begin())) {
    throw std::invalid_argument("CSV header does not match the result columns");
  }
  std::vector<BenchmarkResult> out;
  while (read_record(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) {
      continue;
    }
    if (fields.size() != cols.size()) {
      throw std::invalid_argument("CSV row has " + std::to_string(fields.size()) +
                                  " fields, expected " + std::to_string(cols.size()));
    }
    BenchmarkResult r;
    r.id = parse_int(fields[0], "id");
    r.timestamp = fields[1];
    auto platform = parse_api_platform(fields[2]);
    if (!platform) {
      throw std::invalid_argument("unknown platform: " + fields[2]);
    }
    r.platform = *platform;
    r.endpoint_url = fields[3];
    r.model = fields[4];
    r.quantization.raw = fields[5];
    r.quantization.family = parse_quant_family(fields[6]).value_or(QuantFamily::Unknown);
    r.prompt_hash = fields[7];
    r.prompt_text = fields[8];
    r.tokens = parse_int(fields[9], "tokens");
    r.tokens_estimated = fields[10] == "true";
    r.duration_s = parse_double(fields[11], "duration_s");
    r.duration_total_s = parse_double(fields[12], "duration_total_s");
    r.tokens_per_s = parse_double(fields[13], "tokens_per_s");
    r.energy_wh = parse_double(fields[14], "energy_wh");
    r.wh_per_token = parse_double(fields[15], "wh_per_token");
    r.quality.value = static_cast<int>(parse_int(fields[16], "quality_score"));
    auto method = parse_quality_method(fields[17]);
    if (!method) {
      throw std::invalid_argument("unknown quality method: " + fields[17]);
    }
    r.quality.method = *method;
    if (!fields[18].empty()) {
      r.quality.judge_model = fields[18];
    }
    r.response_text = fields[19];
    out.push_back(std::move(r));
  }
  return out;
}

fs::path default_database_path() {
  fs::path base;
  if (const char* xdg = std::getenv("XDG_DATA_HOME"); xdg != nullptr && *xdg != '\0') {
    base = xdg;
  } else if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
    base = fs::path(home) / ".local" / "share";
  } else {
    base = fs::current_path();
  }
  return base / "envirollm" / "benchmarks.db";
}

ResultStore::ResultStore(const fs::path& path) : path_(path) {
  const bool in_memory = path.string() == ":memory:";
  if (!in_memory && path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw StorageError("cannot create directory: " + ec.message(), path.parent_path().string());
    }
  }
  if (sqlite3_open_v2(path.c_str(), &db_,
                      SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string message = db_ != nullptr ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw StorageError("cannot open database: " + message, path.string());
  }
  sqlite3_busy_timeout(db_, 5000);
  char* err = nullptr;
  const std::string pragmas =
      in_memory ? "" : "PRAGMA journal_mode=WAL; PRAGMA synchronous=FULL;";
  if (sqlite3_exec(db_, (pragmas + kSchema).c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string message = err != nullptr ? err : "unknown error";
    sqlite3_free(err);
    sqlite3_close(db_);
    db_ = nullptr;
    throw StorageError("cannot initialise schema: " + message, path.string());
  }
}

ResultStore::~ResultStore() { sqlite3_close(db_); }

std::int64_t ResultStore::save(const BenchmarkResult& r) {
  validate(r);
  std::lock_guard lock(mutex_);
  Statement s(db_,
              "INSERT INTO results (timestamp, platform, endpoint_url, model, quantization_raw, "
              "quantization_family, prompt_hash, prompt_text, tokens, tokens_estimated, "
              "duration_s, duration_total_s, tokens_per_s, energy_wh, wh_per_token, "
              "quality_score, quality_method, judge_model, response_text, quality_completeness, "
              "quality_diversity, quality_length, quality_structure) "
              "VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?)",
              path_);
  s.bind(1, r.timestamp);
  s.bind(2, std::string(to_string(r.platform)));
  s.bind(3, r.endpoint_url);
  s.bind(4, r.model);
  s.bind(5, r.quantization.raw);
  s.bind(6, std::string(to_string(r.quantization.family)));
  s.bind(7, r.prompt_hash);
  s.bind(8, r.prompt_text);
  s.bind(9, r.tokens);
  s.bind(10, static_cast<std::int64_t>(r.tokens_estimated ? 1 : 0));
  s.bind(11, r.duration_s);
  s.bind(12, r.duration_total_s);
  s.bind(13, r.tokens_per_s);
  s.bind(14, r.energy_wh);
  s.bind(15, r.wh_per_token);
  s.bind(16, static_cast<std::int64_t>(r.quality.value));
  s.bind(17, std::string(to_string(r.quality.method)));
  if (r.quality.judge_model) {
    s.bind(18, *r.quality.judge_model);
  } else {
    s.bind_null(18);
  }
  s.bind(19, r.response_text);
  if (r.quality.subscores) {
    s.bind(20, static_cast<std::int64_t>(r.quality.subscores->completeness));
    s.bind(21, static_cast<std::int64_t>(r.quality.subscores->diversity));
    s.bind(22, static_cast<std::int64_t>(r.quality.subscores->length));
    s.bind(23, static_cast<std::int64_t>(r.quality.subscores->structure));
  } else {
    for (int i = 20; i <= 23; ++i) {
      s.bind_null(i);
    }
  }
  s.step();
  return sqlite3_last_insert_rowid(db_);
}

std::optional<BenchmarkResult> ResultStore::load(std::int64_t id) const {
  std::lock_guard lock(mutex_);
  Statement s(db_, std::string(kSelectColumns) + " WHERE id = ?", path_);
  s.bind(1, id);
  if (!s.step()) {
    return std::nullopt;
  }
  return read_row(s);
}

std::vector<BenchmarkResult> ResultStore::list(const ResultFilter& filter) const {
  const auto where = where_for(filter);
  std::lock_guard lock(mutex_);
  Statement s(db_, std::string(kSelectColumns) + where.clause + " ORDER BY timestamp, id", path_);
  for (std::size_t i = 0; i < where.args.size(); ++i) {
    s.bind(static_cast<int>(i + 1), where.args[i]);
  }
  std::vector<BenchmarkResult> out;
  while (s.step()) {
    out.push_back(read_row(s));
  }
  return out;
}

std::vector<BenchmarkGroup> ResultStore::list_grouped(const ResultFilter& filter) const {
  std::vector<BenchmarkGroup> groups;
  std::map<std::string, std::size_t> index;
  for (auto& r : list(filter)) {
    auto [it, inserted] = index.try_emplace(r.prompt_hash, groups.size());
    if (inserted) {
      groups.push_back(BenchmarkGroup{r.prompt_hash, r.prompt_text, {}});
    }
    groups[it->second].results.push_back(std::move(r));
  }
  // Most recent activity first; results are already timestamp ascending.
  std::stable_sort(groups.begin(), groups.end(), [](const BenchmarkGroup& a, const BenchmarkGroup& b) {
    const auto& ta = a.results.back().timestamp;
    const auto& tb = b.results.back().timestamp;
    if (ta != tb) {
      return ta > tb;
    }
    return a.prompt_hash < b.prompt_hash;
  });
  return groups;
}

std::size_t ResultStore::count() const {
  std::lock_guard lock(mutex_);
  Statement s(db_, "SELECT COUNT(*) FROM results", path_);
  s.step();
  return static_cast<std::size_t>(s.integer(0));
}

std::size_t ResultStore::export_csv(std::ostream& out) const {
  const auto rows = write_results_csv(out, list());
  if (!out) {
    throw StorageError("failed writing CSV", path_.string());
  }
  return rows;
}

std::size_t ResultStore::export_csv(const fs::path& destination) const {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw StorageError("cannot open CSV destination", destination.string());
  }
  const auto rows = write_results_csv(out, list());
  out.flush();
  if (!out) {
    throw StorageError("failed writing CSV", destination.string());
  }
  return rows;
}

std::size_t ResultStore::clean(const CleanScope& scope) {
  std::lock_guard lock(mutex_);
  std::unique_ptr<Statement> s;
  if (std::holds_alternative<CleanAll>(scope)) {
    s = std::make_unique<Statement>(db_, "DELETE FROM results", path_);
  } else if (const auto* older = std::get_if<CleanOlderThan>(&scope)) {
    s = std::make_unique<Statement>(db_, "DELETE FROM results WHERE timestamp < ?", path_);
    s->bind(1, older->timestamp);
  } else {
    s = std::make_unique<Statement>(db_, "DELETE FROM results WHERE model = ?", path_);
    s->bind(1, std::get<CleanModel>(scope).model);
  }
  s->step();
  return static_cast<std::size_t>(sqlite3_changes(db_));
}

}  // namespace envirollm
