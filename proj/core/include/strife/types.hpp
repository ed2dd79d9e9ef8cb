#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace strife {

enum class Task { kDetect, kLevel, kContext, kMotive, kConsequence };

inline constexpr Task kAllTasks[] = {Task::kDetect, Task::kLevel, Task::kContext, Task::kMotive,
                                     Task::kConsequence};
inline constexpr Task kCategorizationTasks[] = {Task::kLevel, Task::kContext, Task::kMotive,
                                                Task::kConsequence};

std::string_view to_string(Task task) noexcept;
/// Throws Error(kValidation) for anything outside the five supported tasks.
Task parse_task(std::string_view name);
bool is_categorization(Task task) noexcept;

inline constexpr std::string_view kViolent = "violent";
inline constexpr std::string_view kNonViolent = "nonviolent";

/// Citation of one section: work, chapter, section (both 1-based).
struct SourceRef {
  std::string work_id;
  int chapter = 0;
  int section = 0;

  auto operator<=>(const SourceRef&) const = default;
  bool operator==(const SourceRef&) const = default;

  /// "Alexander 51.5"
  std::string display() const;
  bool well_formed() const noexcept { return !work_id.empty() && chapter >= 1 && section >= 1; }
};

struct Passage {
  std::string id;
  SourceRef ref;
  std::string text;
  std::string lang = "en";

  bool operator==(const Passage&) const = default;
};

/// Stable passage id derived from its citation.
std::string passage_id_for(const SourceRef& ref);

struct CuratedEvent {
  std::string id;
  std::string title;
  SourceRef ref;
  std::string translation_text;
  std::string level;
  std::string context;
  std::string motive;
  std::string consequence;
  /// weapon, year, location, period, actors, remark and any other opaque sub-records.
  std::map<std::string, std::string> extras;

  bool operator==(const CuratedEvent&) const = default;

  /// Label of a categorization dimension; throws for Task::kDetect.
  const std::string& label_for(Task task) const;
};

struct Prediction {
  std::string id;
  std::string passage_id;
  Task task = Task::kDetect;
  std::string label;
  double score = 0.0;
  /// Full class distribution in registry order; may be empty for imported predictions.
  std::vector<double> probabilities;
  std::string model_id;
  std::string created_at;
  bool truncated = false;
  std::string job_id;
};

enum class Decision { kAccept, kReject, kRelabel };

std::string_view to_string(Decision decision) noexcept;
Decision parse_decision(std::string_view name);

struct ReviewVerdict {
  std::string id;
  std::string prediction_id;
  Decision decision = Decision::kAccept;
  std::optional<std::string> corrected_label;
  std::string reviewer;
  std::string created_at;
};

/// Where a training example came from: the original text or the k-th paraphrase of it.
struct Provenance {
  int paraphrase_index = 0;  // 0 = original

  bool is_original() const noexcept { return paraphrase_index == 0; }
  std::string to_string() const;
  static Provenance parse(std::string_view text);
  static Provenance original() { return {}; }
  static Provenance paraphrase(int k) { return Provenance{k}; }

  bool operator==(const Provenance&) const = default;
};

struct LabeledExample {
  std::string id;
  /// Passage id (detection) or event id (categorization) the text came from.
  std::string source_id;
  std::string text;
  Task task = Task::kDetect;
  std::string label;
  Provenance provenance;
  /// Id of the original example; set iff provenance is a paraphrase.
  std::optional<std::string> parent_id;
  /// Work of the source citation, used for per-work stratification.
  std::string work_id;

  bool operator==(const LabeledExample&) const = default;
};

}  // namespace strife
