#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strife/llm.hpp"
#include "strife/registry.hpp"
#include "strife/types.hpp"

namespace strife::dataset {

inline constexpr std::uint64_t kDefaultSeed = 13;

struct SplitStats {
  /// label -> count
  std::map<std::string, std::size_t> train;
  std::map<std::string, std::size_t> test;
};

struct DatasetSplit {
  Task task = Task::kDetect;
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  std::uint64_t seed = kDefaultSeed;

  SplitStats stats() const;
};

struct DetectionSplitConfig {
  std::size_t test_violent = 129;
  std::size_t test_nonviolent = 371;
  std::uint64_t seed = kDefaultSeed;

  /// Scales the default 129:371 class mix to `test_size` items with
  /// largest-remainder rounding (500 gives back exactly 129/371).
  static DetectionSplitConfig for_test_size(std::size_t test_size, std::uint64_t seed = kDefaultSeed);
};

/// Held-out detection split. Within each class, test items are spread across
/// works in proportion to that class's per-work counts (largest remainder,
/// ties by work id), then drawn at random inside each work.
/// Throws Error(kConfiguration) when a class has fewer passages than requested.
DatasetSplit make_detection_split(std::span<const Passage> violent, std::span<const Passage> nonviolent,
                                  const DetectionSplitConfig& config = {});

/// Stratified split of curated events for one categorization dimension.
/// Labels with fewer than two events go entirely to train.
DatasetSplit make_categorization_split(std::span<const CuratedEvent> events, Task task, const LabelRegistry& registry,
                                       double train_frac = 0.8, std::uint64_t seed = kDefaultSeed);

/// Number of test items per stratum for a stratified split of `counts`
/// (one entry per stratum) with total round((1 - train_frac) * N). Exposed for
/// property tests.
std::vector<std::size_t> allocate_test_counts(std::span<const std::size_t> counts, double train_frac);

/// Largest-remainder apportionment of `total` across `weights`; ties go to the
/// earlier index. Exposed for property tests.
std::vector<std::size_t> largest_remainder(std::span<const std::size_t> weights, std::size_t total);

/// Throws Error(kValidation) if the split leaks ids across train/test, places a
/// paraphrase in test or apart from its parent, or uses labels outside the registry.
void validate_split(const DatasetSplit& split, const LabelRegistry& registry);

struct AugmentOptions {
  int k = 3;
  /// Concurrent paraphrase requests.
  int parallelism = 1;
  /// Optional on-disk cache keyed by (text hash, prompt checksum, k-index).
  std::shared_ptr<llm::ResponseCache> cache;
};

struct AugmentFailure {
  std::string example_id;
  int paraphrase_index = 0;  // 0 when the whole request failed
  std::string reason;
};

struct AugmentResult {
  /// Originals each followed by their paraphrases 1..k, in input order.
  std::vector<LabeledExample> examples;
  std::vector<AugmentFailure> failures;
  std::size_t requests = 0;
  std::size_t cache_hits = 0;

  std::string error_summary() const;
};

/// Adds k label-preserving paraphrases per original example. A paraphrase equal
/// to its original (after whitespace normalization) is retried once, then
/// skipped; failures are reported, never replaced by substitutes.
AugmentResult augment(std::span<const LabeledExample> train, llm::Paraphraser& paraphraser,
                      const AugmentOptions& options = {});

/// Deterministic shuffle used by all splitters (portable across standard libraries).
void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed);

}  // namespace strife::dataset
