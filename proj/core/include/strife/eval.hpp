#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strife/registry.hpp"

namespace strife::eval {

/// One-vs-rest counts for a single class.
struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t support() const noexcept { return tp + fn; }
  bool operator==(const ClassCounts&) const = default;
};

struct ConfusionCounts {
  Task task = Task::kDetect;
  /// Registry order.
  std::vector<std::string> labels;
  std::vector<ClassCounts> per_class;
  std::size_t n = 0;
  std::size_t correct = 0;

  const ClassCounts& of(std::string_view label) const;
};

/// Throws Error(kValidation) on a length mismatch, empty input or a label
/// outside the registry.
ConfusionCounts confusion(std::span<const std::string> preds, std::span<const std::string> golds,
                          const LabelRegistry& registry);

// 0/0 is 0 for all three.
double precision(const ClassCounts& c) noexcept;
double recall(const ClassCounts& c) noexcept;
double f1(const ClassCounts& c) noexcept;
double f1(double precision, double recall) noexcept;

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Σ_c (support_c / N) · metric_c.
Averages weighted_overall(std::span<const ClassMetrics> classes) noexcept;
/// Unweighted mean over classes with non-zero support.
Averages macro_overall(std::span<const ClassMetrics> classes) noexcept;

struct Baseline {
  std::string label;  // majority class; empty for the random baseline
  double accuracy = 0.0;
};

/// Share of the most frequent gold label; ties go to the earlier registry label.
Baseline majority_baseline(std::span<const std::string> golds, const LabelRegistry& registry);
/// Expected accuracy Σ p_i² of sampling labels from the gold distribution.
double random_baseline(std::span<const std::string> golds);

struct EvalReport {
  Task task = Task::kDetect;
  std::string model_id;
  std::vector<ClassMetrics> classes;
  Averages overall;
  Averages macro;
  double accuracy = 0.0;
  std::size_t n = 0;
  Baseline majority;
  double random = 0.0;
};

EvalReport evaluate(std::span<const std::string> preds, std::span<const std::string> golds,
                    const LabelRegistry& registry, std::string model_id = {});

struct McNemarResult {
  std::size_t b = 0;  // A right, B wrong
  std::size_t c = 0;  // A wrong, B right
  double p_value = 1.0;
  bool degenerate = false;
};

/// Exact two-sided binomial test on the discordant pairs.
McNemarResult mcnemar(std::size_t b, std::size_t c);
McNemarResult mcnemar(std::span<const std::string> preds_a, std::span<const std::string> preds_b,
                      std::span<const std::string> golds);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

enum class Format { kText, kCsv };
Format parse_format(std::string_view name);

struct RenderOptions {
  Format format = Format::kText;
  bool macro = false;
};

/// Half-up rounding used for display only.
double round_half_up(double value, int decimals = 2);
std::string render_report(std::span<const EvalReport> reports, const RenderOptions& options = {});
std::string render_mcnemar(const McNemarResult& result, std::string_view model_a, std::string_view model_b);

}  // namespace strife::eval
