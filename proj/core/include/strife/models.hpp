#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strife/registry.hpp"
#include "strife/tokenizer.hpp"
#include "strife/types.hpp"

namespace strife::models {

/// Small tier: averaged hashed n-gram embeddings under a softmax head.
inline constexpr std::string_view kSmallBackbone = "small-hashbag";

inline constexpr std::string_view kTagAsIs = "as-is";
inline constexpr std::string_view kTagFineTuned = "fine-tuned";
inline constexpr std::string_view kTagAugmented = "fine-tuned and augmented";

struct TrainConfig {
  std::string backbone = std::string(kSmallBackbone);
  std::size_t max_sequence_length = 512;
  int epochs = 10;
  double learning_rate = 1.0;
  std::size_t batch_size = 16;
  std::uint64_t seed = 13;
  /// Categorization only: share of the training examples held out for validation.
  double validation_fraction = 0.0;
  std::uint32_t buckets = 1u << 15;
  std::size_t dim = 32;
  /// Scale each example's loss by N / (K * n_class).
  bool class_weighting = false;
  /// Skip fine-tuning and keep the randomly initialised head.
  bool as_is = false;
  /// Detection decision threshold on P(violent).
  double threshold = 0.5;

  /// Throws Error(kConfiguration).
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct Weights {
  std::uint32_t buckets = 0;
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<float> embedding;  // buckets x dim
  std::vector<float> head;       // classes x dim
  std::vector<float> bias;       // classes
};

/// Trained (or as-is) classifier. Immutable once built, so one handle can serve
/// concurrent predictions.
struct ModelHandle {
  std::string model_id;
  Task task = Task::kDetect;
  /// Snapshot taken at train time; predictions never leave it.
  LabelRegistry registry;
  TrainConfig config;
  std::string tag;
  bool augmented = false;
  std::map<std::string, std::size_t> train_counts;
  /// Validation metrics for categorization, training-set metrics otherwise.
  std::map<std::string, double> metrics;
  std::string trained_at;
  std::shared_ptr<const Weights> weights;
};

struct ClassScores {
  /// Registry order, sums to 1.
  std::vector<double> probabilities;
  bool truncated = false;
};

ClassScores score_text(const ModelHandle& model, std::string_view text);

/// Throws Error(kConfiguration) for an empty or single-class training set or
/// a backbone this build cannot run.
ModelHandle train_detector(std::span<const LabeledExample> train, const TrainConfig& config = {});

/// One independent model per dimension. Throws Error(kConfiguration) for the
/// detect task or fewer than two classes in the training data.
ModelHandle train_categorizer(Task task, std::span<const LabeledExample> train, const TrainConfig& config = {});
ModelHandle train_categorizer(Task task, std::span<const LabeledExample> train, const TrainConfig& config,
                              const LabelRegistry& registry);

/// One prediction per passage in input order; violent iff P(violent) >= threshold.
std::vector<Prediction> predict_violence(const ModelHandle& model, std::span<const Passage> passages,
                                         std::optional<double> threshold = std::nullopt);

/// Argmax over the registry snapshot (ties to the earlier label); score is the
/// winning probability.
std::vector<Prediction> predict_category(const ModelHandle& model, std::span<const std::string> texts);
std::vector<Prediction> predict_category(const ModelHandle& model, std::span<const Passage> passages);

/// Dispatches on the model's task.
std::vector<Prediction> predict(const ModelHandle& model, std::span<const Passage> passages);

/// Writes run_dir/<model_id>/{config.json, registry.txt, weights.bin, metrics.json}
/// and returns that directory.
std::filesystem::path save_model(const ModelHandle& model, const std::filesystem::path& run_dir);
ModelHandle load_model(const std::filesystem::path& model_dir);

/// Loads models from a run directory on first use and keeps them.
class ModelRepository {
 public:
  explicit ModelRepository(std::filesystem::path run_dir = {});

  /// nullptr when the model does not exist.
  std::shared_ptr<const ModelHandle> get(const std::string& model_id);
  /// Registers an in-memory model (also saved when a run directory is set).
  std::shared_ptr<const ModelHandle> add(ModelHandle model);
  const std::filesystem::path& run_dir() const noexcept { return run_dir_; }

 private:
  std::filesystem::path run_dir_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const ModelHandle>> loaded_;
};

}  // namespace strife::models
