#include "strife/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <mutex>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "strife/errors.hpp"
#include "strife/text.hpp"

namespace strife {
namespace {

using nlohmann::json;

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS passages (
  id       TEXT PRIMARY KEY,
  work_id  TEXT NOT NULL,
  chapter  INTEGER NOT NULL CHECK (chapter >= 1),
  section  INTEGER NOT NULL CHECK (section >= 1),
  text     TEXT NOT NULL CHECK (length(text) > 0),
  lang     TEXT NOT NULL,
  UNIQUE (work_id, chapter, section)
);
CREATE TABLE IF NOT EXISTS events (
  id               TEXT PRIMARY KEY,
  title            TEXT NOT NULL,
  work_id          TEXT NOT NULL,
  chapter          INTEGER NOT NULL,
  section          INTEGER NOT NULL,
  translation_text TEXT NOT NULL,
  level            TEXT NOT NULL,
  context          TEXT NOT NULL,
  motive           TEXT NOT NULL,
  consequence      TEXT NOT NULL,
  extras           TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS predictions (
  id            TEXT PRIMARY KEY,
  passage_id    TEXT NOT NULL REFERENCES passages(id) ON DELETE RESTRICT,
  task          TEXT NOT NULL,
  label         TEXT NOT NULL,
  score         REAL NOT NULL CHECK (score >= 0.0 AND score <= 1.0),
  probabilities TEXT NOT NULL,
  model_id      TEXT NOT NULL,
  created_at    TEXT NOT NULL,
  truncated     INTEGER NOT NULL,
  job_id        TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS predictions_task ON predictions(task);
CREATE INDEX IF NOT EXISTS predictions_job ON predictions(job_id);
CREATE TABLE IF NOT EXISTS verdicts (
  seq             INTEGER PRIMARY KEY AUTOINCREMENT,
  id              TEXT NOT NULL UNIQUE,
  prediction_id   TEXT NOT NULL REFERENCES predictions(id) ON DELETE RESTRICT,
  decision        TEXT NOT NULL,
  corrected_label TEXT,
  reviewer        TEXT NOT NULL,
  created_at      TEXT NOT NULL,
  UNIQUE (prediction_id, reviewer)
);
CREATE TABLE IF NOT EXISTS jobs (
  seq          INTEGER PRIMARY KEY AUTOINCREMENT,
  id           TEXT NOT NULL UNIQUE,
  task         TEXT NOT NULL,
  model_id     TEXT NOT NULL,
  works        TEXT NOT NULL,
  status       TEXT NOT NULL,
  processed    INTEGER NOT NULL,
  total        INTEGER NOT NULL,
  label_counts TEXT NOT NULL,
  error        TEXT NOT NULL,
  created_at   TEXT NOT NULL
);
)sql";

class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      fail(ErrorKind::kIo, std::string("sqlite prepare failed: ") + sqlite3_errmsg(db));
    }
  }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
  ~Statement() { sqlite3_finalize(stmt_); }

  Statement& bind(int index, std::string_view value) {
    check(sqlite3_bind_text(stmt_, index, value.data(), static_cast<int>(value.size()),
                            SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind(int index, const std::string& value) { return bind(index, std::string_view(value)); }
  Statement& bind(int index, const char* value) { return bind(index, std::string_view(value)); }
  Statement& bind(int index, std::int64_t value) {
    check(sqlite3_bind_int64(stmt_, index, value));
    return *this;
  }
  Statement& bind(int index, int value) { return bind(index, static_cast<std::int64_t>(value)); }
  Statement& bind(int index, std::size_t value) {
    return bind(index, static_cast<std::int64_t>(value));
  }
  Statement& bind(int index, double value) {
    check(sqlite3_bind_double(stmt_, index, value));
    return *this;
  }
  Statement& bind_null(int index) {
    check(sqlite3_bind_null(stmt_, index));
    return *this;
  }

  /// True when a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    const int ext = sqlite3_extended_errcode(db_);
    const std::string msg = sqlite3_errmsg(db_);
    if (ext == SQLITE_CONSTRAINT_FOREIGNKEY) {
      fail(ErrorKind::kConflict, "row is still referenced: " + msg);
    }
    if ((rc & 0xFF) == SQLITE_CONSTRAINT) fail(ErrorKind::kConflict, "constraint violated: " + msg);
    fail(ErrorKind::kIo, "sqlite step failed: " + msg);
  }

  void run() {
    while (step()) {
    }
  }

  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    if (p == nullptr) return {};
    return std::string(reinterpret_cast<const char*>(p),
                       static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)));
  }
  std::optional<std::string> optional_text(int col) const {
    if (sqlite3_column_type(stmt_, col) == SQLITE_NULL) return std::nullopt;
    return text(col);
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
  double real(int col) const { return sqlite3_column_double(stmt_, col); }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) fail(ErrorKind::kIo, std::string("sqlite bind failed: ") + sqlite3_errmsg(db_));
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err != nullptr ? err : "unknown error";
    sqlite3_free(err);
    fail(ErrorKind::kIo, "sqlite exec failed: " + msg);
  }
}

Passage read_passage(const Statement& s) {
  Passage p;
  p.id = s.text(0);
  p.ref = SourceRef{s.text(1), static_cast<int>(s.integer(2)), static_cast<int>(s.integer(3))};
  p.text = s.text(4);
  p.lang = s.text(5);
  return p;
}

constexpr const char* kPassageColumns = "id, work_id, chapter, section, text, lang";
constexpr const char* kPredictionColumns =
    "id, passage_id, task, label, score, probabilities, model_id, created_at, truncated, job_id";

Prediction read_prediction(const Statement& s) {
  Prediction p;
  p.id = s.text(0);
  p.passage_id = s.text(1);
  p.task = parse_task(s.text(2));
  p.label = s.text(3);
  p.score = s.real(4);
  p.probabilities = json::parse(s.text(5)).get<std::vector<double>>();
  p.model_id = s.text(6);
  p.created_at = s.text(7);
  p.truncated = s.integer(8) != 0;
  p.job_id = s.text(9);
  return p;
}

constexpr const char* kVerdictColumns =
    "v.id, v.prediction_id, v.decision, v.corrected_label, v.reviewer, v.created_at";

ReviewVerdict read_verdict(const Statement& s) {
  ReviewVerdict v;
  v.id = s.text(0);
  v.prediction_id = s.text(1);
  v.decision = parse_decision(s.text(2));
  v.corrected_label = s.optional_text(3);
  v.reviewer = s.text(4);
  v.created_at = s.text(5);
  return v;
}

constexpr const char* kJobColumns =
    "id, task, model_id, works, status, processed, total, label_counts, error, created_at";

AnnotationJob read_job(const Statement& s) {
  AnnotationJob j;
  j.id = s.text(0);
  j.task = parse_task(s.text(1));
  j.model_id = s.text(2);
  j.works = json::parse(s.text(3)).get<std::vector<std::string>>();
  j.status = parse_job_status(s.text(4));
  j.processed = static_cast<std::size_t>(s.integer(5));
  j.total = static_cast<std::size_t>(s.integer(6));
  j.label_counts = json::parse(s.text(7)).get<std::map<std::string, std::size_t>>();
  j.error = s.text(8);
  j.created_at = s.text(9);
  return j;
}

std::vector<std::string> canonical_works(std::span<const std::string> works) {
  std::vector<std::string> out(works.begin(), works.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::string_view to_string(JobStatus status) noexcept {
  switch (status) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kRunning: return "running";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "queued";
}

JobStatus parse_job_status(std::string_view name) {
  if (name == "queued") return JobStatus::kQueued;
  if (name == "running") return JobStatus::kRunning;
  if (name == "done") return JobStatus::kDone;
  if (name == "failed") return JobStatus::kFailed;
  fail(ErrorKind::kValidation, "unknown job status: '" + std::string(name) + "'");
}

std::string make_id(std::string_view prefix) {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  {
    std::lock_guard lock(mu);
    hi = rng();
    lo = rng();
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return std::string(prefix) + "-" + buf;
}

struct CorpusStore::Impl {
  sqlite3* db = nullptr;
  Registries registries;
  mutable std::recursive_mutex mu;

  ~Impl() {
    if (db != nullptr) sqlite3_close(db);
  }

  // Runs fn inside BEGIN IMMEDIATE ... COMMIT, rolling back on exceptions.
  template <typename Fn>
  auto transaction(Fn&& fn) const {
    std::lock_guard lock(mu);
    exec(db, "BEGIN IMMEDIATE");
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        exec(db, "COMMIT");
      } else {
        auto result = fn();
        exec(db, "COMMIT");
        return result;
      }
    } catch (...) {
      sqlite3_exec(db, "ROLLBACK", nullptr, nullptr, nullptr);
      throw;
    }
  }

  template <typename Fn>
  auto read(Fn&& fn) const {
    std::lock_guard lock(mu);
    return fn();
  }

  std::optional<Prediction> prediction(const std::string& id) const {
    Statement s(db, (std::string("SELECT ") + kPredictionColumns + " FROM predictions WHERE id = ?").c_str());
    s.bind(1, id);
    if (!s.step()) return std::nullopt;
    return read_prediction(s);
  }

  std::optional<Passage> passage(const std::string& id) const {
    Statement s(db, (std::string("SELECT ") + kPassageColumns + " FROM passages WHERE id = ?").c_str());
    s.bind(1, id);
    if (!s.step()) return std::nullopt;
    return read_passage(s);
  }
};

CorpusStore::CorpusStore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
CorpusStore::CorpusStore(CorpusStore&&) noexcept = default;
CorpusStore& CorpusStore::operator=(CorpusStore&&) noexcept = default;
CorpusStore::~CorpusStore() = default;

CorpusStore CorpusStore::open(const std::filesystem::path& path, Registries registries) {
  auto impl = std::make_unique<Impl>();
  impl->registries = std::move(registries);
  const auto name = path.string();
  if (name != ":memory:" && path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
  if (sqlite3_open_v2(name.c_str(), &impl->db, flags, nullptr) != SQLITE_OK) {
    const std::string msg = impl->db != nullptr ? sqlite3_errmsg(impl->db) : "out of memory";
    fail(ErrorKind::kIo, "cannot open store '" + name + "': " + msg);
  }
  sqlite3_busy_timeout(impl->db, 10000);
  exec(impl->db, "PRAGMA foreign_keys = ON");
  if (name != ":memory:") exec(impl->db, "PRAGMA journal_mode = WAL");
  exec(impl->db, kSchema);
  return CorpusStore(std::move(impl));
}

const Registries& CorpusStore::registries() const noexcept { return impl_->registries; }

std::size_t CorpusStore::put_passages(std::span<const Passage> passages) {
  return impl_->transaction([&] {
    std::size_t stored = 0;
    for (const auto& input : passages) {
      Passage p = input;
      p.text = text::normalize_whitespace(p.text);
      if (!p.ref.well_formed()) {
        fail(ErrorKind::kValidation, "malformed source ref for passage '" + p.id + "'");
      }
      if (p.text.empty()) {
        fail(ErrorKind::kValidation, "passage " + p.ref.display() + " has empty text");
      }
      if (p.id.empty()) p.id = passage_id_for(p.ref);
      if (p.lang.empty()) p.lang = "en";

      Statement find(impl_->db,
                     "SELECT id, text FROM passages WHERE work_id = ? AND chapter = ? AND section = ?");
      find.bind(1, p.ref.work_id).bind(2, p.ref.chapter).bind(3, p.ref.section);
      if (find.step()) {
        if (find.text(1) != p.text) {
          fail(ErrorKind::kConflict, "passage " + p.ref.display() + " already stored with different text");
        }
        if (find.text(0) != p.id) {
          fail(ErrorKind::kConflict, "passage " + p.ref.display() + " already stored under id '" +
                                         find.text(0) + "'");
        }
        continue;
      }
      if (impl_->passage(p.id)) {
        fail(ErrorKind::kConflict, "passage id '" + p.id + "' already used by another ref");
      }
      Statement ins(impl_->db,
                    "INSERT INTO passages (id, work_id, chapter, section, text, lang) VALUES (?,?,?,?,?,?)");
      ins.bind(1, p.id).bind(2, p.ref.work_id).bind(3, p.ref.chapter).bind(4, p.ref.section);
      ins.bind(5, p.text).bind(6, p.lang);
      ins.run();
      ++stored;
    }
    return stored;
  });
}

std::optional<Passage> CorpusStore::get_passage(const std::string& id) const {
  return impl_->read([&] { return impl_->passage(id); });
}

std::optional<Passage> CorpusStore::find_passage(const SourceRef& ref) const {
  return impl_->read([&]() -> std::optional<Passage> {
    Statement s(impl_->db, (std::string("SELECT ") + kPassageColumns +
                            " FROM passages WHERE work_id = ? AND chapter = ? AND section = ?")
                               .c_str());
    s.bind(1, ref.work_id).bind(2, ref.chapter).bind(3, ref.section);
    if (!s.step()) return std::nullopt;
    return read_passage(s);
  });
}

std::vector<Passage> CorpusStore::passages(std::span<const std::string> works) const {
  return impl_->read([&] {
    std::vector<Passage> out;
    const std::string base = std::string("SELECT ") + kPassageColumns + " FROM passages";
    const std::string order = " ORDER BY work_id, chapter, section";
    if (works.empty()) {
      Statement s(impl_->db, (base + order).c_str());
      while (s.step()) out.push_back(read_passage(s));
      return out;
    }
    for (const auto& work : canonical_works(works)) {
      Statement s(impl_->db, (base + " WHERE work_id = ?" + order).c_str());
      s.bind(1, work);
      while (s.step()) out.push_back(read_passage(s));
    }
    return out;
  });
}

std::vector<std::string> CorpusStore::work_ids() const {
  return impl_->read([&] {
    std::vector<std::string> out;
    Statement s(impl_->db, "SELECT DISTINCT work_id FROM passages ORDER BY work_id");
    while (s.step()) out.push_back(s.text(0));
    return out;
  });
}

std::size_t CorpusStore::passage_count() const {
  return impl_->read([&] {
    Statement s(impl_->db, "SELECT count(*) FROM passages");
    s.step();
    return static_cast<std::size_t>(s.integer(0));
  });
}

void CorpusStore::delete_passage(const std::string& id) {
  impl_->transaction([&] {
    if (!impl_->passage(id)) fail(ErrorKind::kNotFound, "unknown passage '" + id + "'");
    Statement s(impl_->db, "DELETE FROM passages WHERE id = ?");
    s.bind(1, id);
    s.run();
  });
}

std::size_t CorpusStore::put_events(std::span<const CuratedEvent> events) {
  return impl_->transaction([&] {
    std::size_t stored = 0;
    for (const auto& e : events) {
      if (e.id.empty()) fail(ErrorKind::kValidation, "event without id");
      if (!e.ref.well_formed()) fail(ErrorKind::kValidation, "malformed source ref for event '" + e.id + "'");
      const auto normalized = text::normalize_whitespace(e.translation_text);
      if (normalized.empty()) fail(ErrorKind::kValidation, "event '" + e.id + "' has empty translation text");
      for (Task t : kCategorizationTasks) {
        const auto& label = e.label_for(t);
        if (!impl_->registries.get(t).contains(label)) {
          fail(ErrorKind::kValidation, "event '" + e.id + "': " + std::string(to_string(t)) +
                                           " label '" + label + "' is not in the registry");
        }
      }
      json extras = json::object();
      for (const auto& [k, v] : e.extras) extras[k] = v;

      Statement find(impl_->db,
                     "SELECT translation_text, work_id, chapter, section, level, context, motive, "
                     "consequence FROM events WHERE id = ?");
      find.bind(1, e.id);
      if (find.step()) {
        const bool same = find.text(0) == normalized && find.text(1) == e.ref.work_id &&
                          find.integer(2) == e.ref.chapter && find.integer(3) == e.ref.section &&
                          find.text(4) == e.level && find.text(5) == e.context &&
                          find.text(6) == e.motive && find.text(7) == e.consequence;
        if (!same) fail(ErrorKind::kConflict, "event '" + e.id + "' already stored with different content");
        continue;
      }
      Statement ins(impl_->db,
                    "INSERT INTO events (id, title, work_id, chapter, section, translation_text, level, "
                    "context, motive, consequence, extras) VALUES (?,?,?,?,?,?,?,?,?,?,?)");
      ins.bind(1, e.id).bind(2, e.title).bind(3, e.ref.work_id).bind(4, e.ref.chapter);
      ins.bind(5, e.ref.section).bind(6, normalized).bind(7, e.level).bind(8, e.context);
      ins.bind(9, e.motive).bind(10, e.consequence).bind(11, extras.dump());
      ins.run();
      ++stored;
    }
    return stored;
  });
}

std::vector<CuratedEvent> CorpusStore::events() const {
  return impl_->read([&] {
    std::vector<CuratedEvent> out;
    Statement s(impl_->db,
                "SELECT id, title, work_id, chapter, section, translation_text, level, context, motive, "
                "consequence, extras FROM events ORDER BY id");
    while (s.step()) {
      CuratedEvent e;
      e.id = s.text(0);
      e.title = s.text(1);
      e.ref = SourceRef{s.text(2), static_cast<int>(s.integer(3)), static_cast<int>(s.integer(4))};
      e.translation_text = s.text(5);
      e.level = s.text(6);
      e.context = s.text(7);
      e.motive = s.text(8);
      e.consequence = s.text(9);
      e.extras = json::parse(s.text(10)).get<std::map<std::string, std::string>>();
      out.push_back(std::move(e));
    }
    return out;
  });
}

std::vector<Prediction> CorpusStore::put_predictions(std::span<const Prediction> predictions) {
  return impl_->transaction([&] {
    std::vector<Prediction> out;
    out.reserve(predictions.size());
    for (auto p : predictions) {
      if (!(p.score >= 0.0 && p.score <= 1.0)) {
        fail(ErrorKind::kValidation, "prediction score must lie in [0,1]");
      }
      const auto& registry = impl_->registries.get(p.task);
      registry.require(p.label);
      if (!p.probabilities.empty() && p.probabilities.size() != registry.size()) {
        fail(ErrorKind::kValidation, "probability vector does not match the registry size");
      }
      if (!impl_->passage(p.passage_id)) {
        fail(ErrorKind::kNotFound, "prediction references unknown passage '" + p.passage_id + "'");
      }
      if (p.id.empty()) p.id = make_id("pred");
      if (p.created_at.empty()) p.created_at = text::utc_timestamp();
      Statement ins(impl_->db,
                    "INSERT INTO predictions (id, passage_id, task, label, score, probabilities, model_id, "
                    "created_at, truncated, job_id) VALUES (?,?,?,?,?,?,?,?,?,?)");
      ins.bind(1, p.id).bind(2, p.passage_id).bind(3, to_string(p.task)).bind(4, p.label);
      ins.bind(5, p.score).bind(6, json(p.probabilities).dump()).bind(7, p.model_id);
      ins.bind(8, p.created_at).bind(9, p.truncated ? 1 : 0).bind(10, p.job_id);
      ins.run();
      out.push_back(std::move(p));
    }
    return out;
  });
}

std::optional<Prediction> CorpusStore::get_prediction(const std::string& id) const {
  return impl_->read([&] { return impl_->prediction(id); });
}

std::vector<Prediction> CorpusStore::predictions(std::optional<Task> task, const std::string& job_id) const {
  return impl_->read([&] {
    std::string sql = std::string("SELECT ") + kPredictionColumns +
                      " FROM predictions WHERE (?1 IS NULL OR task = ?1) AND (?2 = '' OR job_id = ?2)"
                      " ORDER BY rowid";
    Statement s(impl_->db, sql.c_str());
    if (task) {
      s.bind(1, to_string(*task));
    } else {
      s.bind_null(1);
    }
    s.bind(2, job_id);
    std::vector<Prediction> out;
    while (s.step()) out.push_back(read_prediction(s));
    return out;
  });
}

std::vector<Prediction> CorpusStore::pending_predictions(Task task) const {
  return impl_->read([&] {
    std::string sql = std::string("SELECT ") + kPredictionColumns +
                      " FROM predictions p WHERE task = ? AND NOT EXISTS "
                      "(SELECT 1 FROM verdicts v WHERE v.prediction_id = p.id) ORDER BY rowid";
    Statement s(impl_->db, sql.c_str());
    s.bind(1, to_string(task));
    std::vector<Prediction> out;
    while (s.step()) out.push_back(read_prediction(s));
    return out;
  });
}

void CorpusStore::delete_prediction(const std::string& id) {
  impl_->transaction([&] {
    if (!impl_->prediction(id)) fail(ErrorKind::kNotFound, "unknown prediction '" + id + "'");
    Statement s(impl_->db, "DELETE FROM predictions WHERE id = ?");
    s.bind(1, id);
    s.run();
  });
}

ReviewVerdict CorpusStore::record_verdict(ReviewVerdict verdict) {
  return impl_->transaction([&] {
    const auto prediction = impl_->prediction(verdict.prediction_id);
    if (!prediction) fail(ErrorKind::kNotFound, "unknown prediction '" + verdict.prediction_id + "'");
    if (verdict.reviewer.empty()) fail(ErrorKind::kValidation, "verdict needs a reviewer");
    if (verdict.decision == Decision::kRelabel) {
      if (!verdict.corrected_label || verdict.corrected_label->empty()) {
        fail(ErrorKind::kValidation, "relabel requires corrected_label");
      }
      impl_->registries.get(prediction->task).require(*verdict.corrected_label);
    } else if (verdict.corrected_label) {
      fail(ErrorKind::kValidation, "corrected_label is only allowed with decision 'relabel'");
    }
    Statement dup(impl_->db, "SELECT 1 FROM verdicts WHERE prediction_id = ? AND reviewer = ?");
    dup.bind(1, verdict.prediction_id).bind(2, verdict.reviewer);
    if (dup.step()) {
      fail(ErrorKind::kConflict, "reviewer '" + verdict.reviewer + "' already judged prediction '" +
                                     verdict.prediction_id + "'");
    }
    if (verdict.id.empty()) verdict.id = make_id("verdict");
    if (verdict.created_at.empty()) verdict.created_at = text::utc_timestamp();
    Statement ins(impl_->db,
                  "INSERT INTO verdicts (id, prediction_id, decision, corrected_label, reviewer, created_at) "
                  "VALUES (?,?,?,?,?,?)");
    ins.bind(1, verdict.id).bind(2, verdict.prediction_id).bind(3, to_string(verdict.decision));
    if (verdict.corrected_label) {
      ins.bind(4, *verdict.corrected_label);
    } else {
      ins.bind_null(4);
    }
    ins.bind(5, verdict.reviewer).bind(6, verdict.created_at);
    ins.run();
    return verdict;
  });
}

std::vector<ReviewVerdict> CorpusStore::verdicts(std::optional<Task> task) const {
  return impl_->read([&] {
    std::string sql = std::string("SELECT ") + kVerdictColumns +
                      " FROM verdicts v JOIN predictions p ON p.id = v.prediction_id"
                      " WHERE (?1 IS NULL OR p.task = ?1) ORDER BY v.seq";
    Statement s(impl_->db, sql.c_str());
    if (task) {
      s.bind(1, to_string(*task));
    } else {
      s.bind_null(1);
    }
    std::vector<ReviewVerdict> out;
    while (s.step()) out.push_back(read_verdict(s));
    return out;
  });
}

std::vector<LabeledExample> CorpusStore::export_feedback(Task task) const {
  return impl_->read([&] {
    std::vector<LabeledExample> out;
    for (const auto& v : verdicts(task)) {
      const auto prediction = impl_->prediction(v.prediction_id);
      const auto passage = impl_->passage(prediction->passage_id);
      std::optional<std::string> label;
      switch (v.decision) {
        case Decision::kAccept:
          label = prediction->label;
          break;
        case Decision::kRelabel:
          label = v.corrected_label;
          break;
        case Decision::kReject:
          // Only a rejected "violent" detection has an unambiguous correction.
          if (task == Task::kDetect && prediction->label == kViolent) label = std::string(kNonViolent);
          break;
      }
      if (!label) continue;
      LabeledExample e;
      e.id = "feedback:" + v.id;
      e.source_id = passage->id;
      e.text = passage->text;
      e.task = task;
      e.label = *label;
      e.provenance = Provenance::original();
      e.work_id = passage->ref.work_id;
      out.push_back(std::move(e));
    }
    return out;
  });
}

AnnotationJob CorpusStore::put_job(AnnotationJob job) {
  return impl_->transaction([&] {
    job.works = canonical_works(job.works);
    if (job.id.empty()) job.id = make_id("job");
    if (job.created_at.empty()) job.created_at = text::utc_timestamp();
    Statement ins(impl_->db,
                  "INSERT INTO jobs (id, task, model_id, works, status, processed, total, label_counts, "
                  "error, created_at) VALUES (?,?,?,?,?,?,?,?,?,?)");
    ins.bind(1, job.id).bind(2, to_string(job.task)).bind(3, job.model_id).bind(4, json(job.works).dump());
    ins.bind(5, to_string(job.status)).bind(6, job.processed).bind(7, job.total);
    ins.bind(8, json(job.label_counts).dump()).bind(9, job.error).bind(10, job.created_at);
    ins.run();
    return job;
  });
}

void CorpusStore::update_job(const AnnotationJob& job) {
  impl_->transaction([&] {
    Statement cur(impl_->db, "SELECT status FROM jobs WHERE id = ?");
    cur.bind(1, job.id);
    if (!cur.step()) fail(ErrorKind::kNotFound, "unknown job '" + job.id + "'");
    const auto from = parse_job_status(cur.text(0));
    const bool terminal = from == JobStatus::kDone || from == JobStatus::kFailed;
    if (static_cast<int>(job.status) < static_cast<int>(from) || (terminal && job.status != from)) {
      fail(ErrorKind::kConflict, "job status cannot move from " + std::string(to_string(from)) + " to " +
                                     std::string(to_string(job.status)));
    }
    Statement up(impl_->db,
                 "UPDATE jobs SET status = ?, processed = ?, total = ?, label_counts = ?, error = ? WHERE id = ?");
    up.bind(1, to_string(job.status)).bind(2, job.processed).bind(3, job.total);
    up.bind(4, json(job.label_counts).dump()).bind(5, job.error).bind(6, job.id);
    up.run();
  });
}

std::optional<AnnotationJob> CorpusStore::get_job(const std::string& id) const {
  return impl_->read([&]() -> std::optional<AnnotationJob> {
    Statement s(impl_->db, (std::string("SELECT ") + kJobColumns + " FROM jobs WHERE id = ?").c_str());
    s.bind(1, id);
    if (!s.step()) return std::nullopt;
    return read_job(s);
  });
}

std::optional<AnnotationJob> CorpusStore::find_job(Task task, const std::string& model_id,
                                                   std::span<const std::string> works) const {
  return impl_->read([&]() -> std::optional<AnnotationJob> {
    Statement s(impl_->db, (std::string("SELECT ") + kJobColumns +
                            " FROM jobs WHERE task = ? AND model_id = ? AND works = ? ORDER BY seq DESC LIMIT 1")
                               .c_str());
    s.bind(1, to_string(task)).bind(2, model_id).bind(3, json(canonical_works(works)).dump());
    if (!s.step()) return std::nullopt;
    return read_job(s);
  });
}

}  // namespace strife
