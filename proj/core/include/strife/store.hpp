#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strife/registry.hpp"
#include "strife/types.hpp"

namespace strife {

enum class JobStatus { kQueued, kRunning, kDone, kFailed };
std::string_view to_string(JobStatus status) noexcept;
JobStatus parse_job_status(std::string_view name);

struct AnnotationJob {
  std::string id;
  Task task = Task::kDetect;
  std::string model_id;
  /// Sorted, de-duplicated work ids; empty means the whole corpus.
  std::vector<std::string> works;
  JobStatus status = JobStatus::kQueued;
  std::size_t processed = 0;
  std::size_t total = 0;
  /// Predicted label -> count.
  std::map<std::string, std::size_t> label_counts;
  std::string error;
  std::string created_at;
};

/// Persistent store for passages, curated events, predictions, review verdicts
/// and annotation jobs. Backed by a single SQLite file; every public call is
/// one transaction, so a handle may be shared across threads.
class CorpusStore {
 public:
  /// Opens (and migrates) the database; ":memory:" gives a private in-memory store.
  static CorpusStore open(const std::filesystem::path& path, Registries registries = {});

  CorpusStore(CorpusStore&&) noexcept;
  CorpusStore& operator=(CorpusStore&&) noexcept;
  ~CorpusStore();

  const Registries& registries() const noexcept;

  // -- passages
  /// Returns the number of newly stored passages. Text is whitespace-normalized
  /// first; a ref already stored with identical text is a no-op, with different
  /// text a conflict. The whole batch is rejected on any error.
  std::size_t put_passages(std::span<const Passage> passages);
  std::optional<Passage> get_passage(const std::string& id) const;
  std::optional<Passage> find_passage(const SourceRef& ref) const;
  /// Ordered by (work_id, chapter, section); an empty filter selects all works.
  std::vector<Passage> passages(std::span<const std::string> works = {}) const;
  std::vector<std::string> work_ids() const;
  std::size_t passage_count() const;
  /// Throws kConflict while any prediction references the passage.
  void delete_passage(const std::string& id);

  // -- curated events
  /// Idempotent on id; returns newly stored count. Labels must be in their registries.
  std::size_t put_events(std::span<const CuratedEvent> events);
  std::vector<CuratedEvent> events() const;

  // -- predictions
  /// Validates and stores; assigns id and created_at when empty.
  std::vector<Prediction> put_predictions(std::span<const Prediction> predictions);
  std::optional<Prediction> get_prediction(const std::string& id) const;
  std::vector<Prediction> predictions(std::optional<Task> task = std::nullopt,
                                      const std::string& job_id = {}) const;
  /// Predictions of the task that have no verdict yet.
  std::vector<Prediction> pending_predictions(Task task) const;
  /// Throws kConflict while any verdict references the prediction.
  void delete_prediction(const std::string& id);

  // -- review verdicts
  /// Throws kNotFound for an unknown prediction, kValidation for a bad relabel,
  /// kConflict when the reviewer already judged this prediction.
  ReviewVerdict record_verdict(ReviewVerdict verdict);
  /// Verdicts in recording order, optionally limited to predictions of one task.
  std::vector<ReviewVerdict> verdicts(std::optional<Task> task = std::nullopt) const;
  /// Turns verdicts into training examples; see README for the mapping rules.
  std::vector<LabeledExample> export_feedback(Task task) const;

  // -- annotation jobs
  AnnotationJob put_job(AnnotationJob job);
  void update_job(const AnnotationJob& job);
  std::optional<AnnotationJob> get_job(const std::string& id) const;
  /// Most recent job with the same (task, model, works) key.
  std::optional<AnnotationJob> find_job(Task task, const std::string& model_id,
                                        std::span<const std::string> works) const;

 private:
  struct Impl;
  explicit CorpusStore(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Random 128-bit identifier rendered as hex with a prefix ("pred-...").
std::string make_id(std::string_view prefix);

}  // namespace strife
