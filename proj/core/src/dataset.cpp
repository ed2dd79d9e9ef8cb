#include "strife/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <thread>

#include "strife/errors.hpp"
#include "strife/text.hpp"

namespace strife::dataset {
namespace {

__extension__ using u128 = unsigned __int128;

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<u128>(rng()) * n) >> 64);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view salt) { return text::fnv1a64(salt, seed ^ 0x9e3779b97f4a7c15ULL); }

LabeledExample from_passage(const Passage& p, std::string_view label) {
  LabeledExample e;
  e.id = p.id;
  e.source_id = p.id;
  e.text = p.text;
  e.task = Task::kDetect;
  e.label = std::string(label);
  e.work_id = p.ref.work_id;
  return e;
}

// Splits one class: returns (train, test) keeping corpus order.
void split_class(std::span<const Passage> passages, std::string_view label, std::size_t n_test, std::uint64_t seed,
                 std::vector<std::pair<SourceRef, LabeledExample>>& train,
                 std::vector<std::pair<SourceRef, LabeledExample>>& test) {
  if (passages.size() < n_test) {
    fail(ErrorKind::kConfiguration, "need at least " + std::to_string(n_test) + " " + std::string(label) +
                                        " passages for the test split, have " + std::to_string(passages.size()));
  }
  std::map<std::string, std::vector<const Passage*>> by_work;
  for (const auto& p : passages) by_work[p.ref.work_id].push_back(&p);

  std::vector<std::size_t> counts;
  for (const auto& [work, items] : by_work) counts.push_back(items.size());
  const auto alloc = largest_remainder(counts, n_test);

  std::size_t w = 0;
  for (auto& [work, items] : by_work) {
    std::sort(items.begin(), items.end(), [](const Passage* a, const Passage* b) { return a->ref < b->ref; });
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    seeded_shuffle(order, derive_seed(seed, std::string(label) + "/" + work));
    std::vector<bool> in_test(items.size(), false);
    for (std::size_t i = 0; i < alloc[w]; ++i) in_test[order[i]] = true;
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto& dest = in_test[i] ? test : train;
      dest.emplace_back(items[i]->ref, from_passage(*items[i], label));
    }
    ++w;
  }
}

std::vector<LabeledExample> in_ref_order(std::vector<std::pair<SourceRef, LabeledExample>> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<LabeledExample> out;
  out.reserve(rows.size());
  for (auto& [ref, e] : rows) out.push_back(std::move(e));
  return out;
}

}  // namespace

void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

std::vector<std::size_t> largest_remainder(std::span<const std::size_t> weights, std::size_t total) {
  std::vector<std::size_t> out(weights.size(), 0);
  u128 sum = 0;
  for (auto w : weights) sum += w;
  if (sum == 0) {
    if (total != 0) fail(ErrorKind::kConfiguration, "cannot apportion a positive total over zero weights");
    return out;
  }
  std::vector<std::pair<u128, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const u128 scaled = static_cast<u128>(total) * weights[i];
    out[i] = static_cast<std::size_t>(scaled / sum);
    assigned += out[i];
    remainders.emplace_back(scaled % sum, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++out[remainders[r].second];
  return out;
}

std::vector<std::size_t> allocate_test_counts(std::span<const std::size_t> counts, double train_frac) {
  const double test_frac = 1.0 - train_frac;
  std::size_t n = 0;
  std::size_t capacity = 0;
  for (auto c : counts) {
    n += c;
    if (c >= 2) capacity += c - 1;
  }
  auto target = static_cast<std::size_t>(std::floor(test_frac * static_cast<double>(n) + 0.5 + 1e-9));
  target = std::min(target, capacity);

  std::vector<std::size_t> out(counts.size(), 0);
  std::vector<double> frac(counts.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 2) continue;
    const double quota = test_frac * static_cast<double>(counts[i]);
    const double whole = std::floor(quota + 1e-9);
    out[i] = std::min(static_cast<std::size_t>(whole), counts[i] - 1);
    frac[i] = quota - whole;
    assigned += out[i];
  }
  while (assigned < target) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] >= 2 && out[i] < counts[i] - 1) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (auto i : order) {
      if (assigned == target) break;
      ++out[i];
      ++assigned;
    }
  }
  return out;
}

SplitStats DatasetSplit::stats() const {
  SplitStats s;
  for (const auto& e : train) ++s.train[e.label];
  for (const auto& e : test) ++s.test[e.label];
  return s;
}

DetectionSplitConfig DetectionSplitConfig::for_test_size(std::size_t test_size, std::uint64_t seed) {
  const std::size_t mix[] = {129, 371};
  const auto alloc = largest_remainder(mix, test_size);
  return DetectionSplitConfig{alloc[0], alloc[1], seed};
}

DatasetSplit make_detection_split(std::span<const Passage> violent, std::span<const Passage> nonviolent,
                                  const DetectionSplitConfig& config) {
  std::set<SourceRef> violent_refs;
  for (const auto& p : violent) violent_refs.insert(p.ref);
  for (const auto& p : nonviolent) {
    if (violent_refs.contains(p.ref)) {
      fail(ErrorKind::kValidation, "passage " + p.ref.display() + " is listed as both violent and non-violent");
    }
  }
  std::vector<std::pair<SourceRef, LabeledExample>> train;
  std::vector<std::pair<SourceRef, LabeledExample>> test;
  split_class(violent, kViolent, config.test_violent, config.seed, train, test);
  split_class(nonviolent, kNonViolent, config.test_nonviolent, config.seed, train, test);

  DatasetSplit split;
  split.task = Task::kDetect;
  split.seed = config.seed;
  split.train = in_ref_order(std::move(train));
  split.test = in_ref_order(std::move(test));
  return split;
}

DatasetSplit make_categorization_split(std::span<const CuratedEvent> events, Task task, const LabelRegistry& registry,
                                       double train_frac, std::uint64_t seed) {
  if (!is_categorization(task)) fail(ErrorKind::kConfiguration, "categorization split needs a categorization task");
  if (registry.task() != task) fail(ErrorKind::kConfiguration, "registry does not belong to the requested task");
  if (events.empty()) fail(ErrorKind::kConfiguration, "categorization split needs at least one event");
  if (!(train_frac > 0.0 && train_frac <= 1.0)) {
    fail(ErrorKind::kConfiguration, "train fraction must lie in (0, 1]");
  }

  std::vector<std::vector<LabeledExample>> strata(registry.size());
  std::set<std::string> ids;
  for (const auto& ev : events) {
    const auto& label = ev.label_for(task);
    if (label.empty()) fail(ErrorKind::kValidation, "event '" + ev.id + "' has no " + std::string(to_string(task)) + " label");
    const auto idx = registry.require(label);
    if (!ids.insert(ev.id).second) fail(ErrorKind::kValidation, "duplicate event id '" + ev.id + "'");
    LabeledExample e;
    e.id = ev.id;
    e.source_id = ev.id;
    e.text = text::normalize_whitespace(ev.translation_text);
    e.task = task;
    e.label = label;
    e.work_id = ev.ref.work_id;
    strata[idx].push_back(std::move(e));
  }

  std::vector<std::size_t> counts;
  for (const auto& s : strata) counts.push_back(s.size());
  const auto alloc = allocate_test_counts(counts, train_frac);

  DatasetSplit split;
  split.task = task;
  split.seed = seed;
  for (std::size_t c = 0; c < strata.size(); ++c) {
    auto& items = strata[c];
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    seeded_shuffle(order, derive_seed(seed, std::string(to_string(task)) + "/" + registry.label(c)));
    std::vector<bool> in_test(items.size(), false);
    for (std::size_t i = 0; i < alloc[c]; ++i) in_test[order[i]] = true;
    for (std::size_t i = 0; i < items.size(); ++i) (in_test[i] ? split.test : split.train).push_back(items[i]);
  }
  auto by_id = [](const LabeledExample& a, const LabeledExample& b) { return a.id < b.id; };
  std::sort(split.train.begin(), split.train.end(), by_id);
  std::sort(split.test.begin(), split.test.end(), by_id);
  return split;
}

void validate_split(const DatasetSplit& split, const LabelRegistry& registry) {
  std::set<std::string> train_sources;
  std::set<std::string> train_ids;
  for (const auto& e : split.train) {
    train_sources.insert(e.source_id);
    train_ids.insert(e.id);
  }
  for (const auto& e : split.test) {
    if (!e.provenance.is_original()) fail(ErrorKind::kValidation, "paraphrase '" + e.id + "' is in the test split");
    if (train_sources.contains(e.source_id)) {
      fail(ErrorKind::kValidation, "source '" + e.source_id + "' appears in both train and test");
    }
    registry.require(e.label);
  }
  std::map<std::string, std::string> label_of;
  for (const auto& e : split.train) {
    registry.require(e.label);
    if (e.provenance.is_original()) label_of[e.id] = e.label;
  }
  for (const auto& e : split.train) {
    if (e.provenance.is_original()) continue;
    if (!e.parent_id || !train_ids.contains(*e.parent_id)) {
      fail(ErrorKind::kValidation, "paraphrase '" + e.id + "' has no parent in the same split");
    }
    if (label_of[*e.parent_id] != e.label) {
      fail(ErrorKind::kValidation, "paraphrase '" + e.id + "' changed its parent's label");
    }
  }
}

std::string AugmentResult::error_summary() const {
  if (failures.empty()) return {};
  std::map<std::string, std::size_t> by_reason;
  for (const auto& f : failures) ++by_reason[f.reason];
  std::string out = std::to_string(failures.size()) + " paraphrase(s) skipped:";
  for (const auto& [reason, n] : by_reason) out += " " + std::to_string(n) + "x " + reason + ";";
  return out;
}

AugmentResult augment(std::span<const LabeledExample> train, llm::Paraphraser& paraphraser,
                      const AugmentOptions& options) {
  if (options.k < 0) fail(ErrorKind::kValidation, "k must be >= 0");
  for (const auto& e : train) {
    if (!e.provenance.is_original()) {
      fail(ErrorKind::kValidation, "augment expects original examples, got paraphrase '" + e.id + "'");
    }
  }
  AugmentResult result;
  if (options.k == 0) {
    result.examples.assign(train.begin(), train.end());
    return result;
  }

  struct Slot {
    std::vector<LabeledExample> paraphrases;
    std::vector<AugmentFailure> failures;
    std::size_t requests = 0;
    std::size_t cache_hits = 0;
  };
  std::vector<Slot> slots(train.size());
  const auto checksum = paraphraser.prompt_checksum();
  const int k = options.k;

  auto process = [&](std::size_t index) {
    const auto& original = train[index];
    auto& slot = slots[index];
    const auto source = text::normalize_whitespace(original.text);
    std::vector<std::optional<std::string>> variants(static_cast<std::size_t>(k));
    if (options.cache) {
      for (int j = 1; j <= k; ++j) {
        if (auto hit = options.cache->get(checksum, source, j)) {
          variants[static_cast<std::size_t>(j - 1)] = std::move(hit);
          ++slot.cache_hits;
        }
      }
    }
    auto missing = [&] {
      std::vector<int> out;
      for (int j = 1; j <= k; ++j) {
        if (!variants[static_cast<std::size_t>(j - 1)]) out.push_back(j);
      }
      return out;
    };
    auto request = [&]() -> std::optional<std::vector<std::string>> {
      ++slot.requests;
      try {
        return paraphraser.paraphrase(source, k);
      } catch (const Error& e) {
        slot.failures.push_back({original.id, 0, std::string(to_string(e.kind())) + " error: " + e.what()});
        return std::nullopt;
      }
    };
    auto accept = [&](const std::vector<std::string>& response, bool last_try) {
      for (int j : missing()) {
        const auto candidate = text::normalize_whitespace(response[static_cast<std::size_t>(j - 1)]);
        if (!candidate.empty() && candidate != source) {
          variants[static_cast<std::size_t>(j - 1)] = candidate;
          if (options.cache) options.cache->put(checksum, source, j, candidate);
        } else if (last_try) {
          slot.failures.push_back({original.id, j, "paraphrase identical to original"});
        }
      }
    };

    if (!missing().empty()) {
      if (auto first = request()) {
        accept(*first, false);
        if (!missing().empty()) {
          if (auto second = request()) accept(*second, true);
        }
      }
    }
    for (int j = 1; j <= k; ++j) {
      const auto& v = variants[static_cast<std::size_t>(j - 1)];
      if (!v) continue;
      LabeledExample p = original;
      p.id = original.id + "#p" + std::to_string(j);
      p.text = *v;
      p.provenance = Provenance::paraphrase(j);
      p.parent_id = original.id;
      slot.paraphrases.push_back(std::move(p));
    }
  };

  const auto workers = static_cast<std::size_t>(std::max(1, options.parallelism));
  if (workers == 1 || train.size() < 2) {
    for (std::size_t i = 0; i < train.size(); ++i) process(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, train.size()); ++w) {
      pool.emplace_back([&] {
        for (auto i = next++; i < train.size(); i = next++) process(i);
      });
    }
  }

  for (std::size_t i = 0; i < train.size(); ++i) {
    result.examples.push_back(train[i]);
    auto& slot = slots[i];
    for (auto& p : slot.paraphrases) result.examples.push_back(std::move(p));
    for (auto& f : slot.failures) {
      spdlog::warn("augment: {} paraphrase {} skipped: {}", f.example_id, f.paraphrase_index, f.reason);
      result.failures.push_back(std::move(f));
    }
    result.requests += slot.requests;
    result.cache_hits += slot.cache_hits;
  }
  return result;
}

}  // namespace strife::dataset
