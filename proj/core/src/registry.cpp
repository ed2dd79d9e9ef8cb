#include "strife/registry.hpp"

#include <set>

#include "registry_data.hpp"
#include "strife/errors.hpp"
#include "strife/text.hpp"

namespace strife {
namespace {

constexpr std::string_view kUnverifiedTag = "[unverified]";

std::string_view builtin_text(Task task) {
  switch (task) {
    case Task::kDetect: return detail::kRegistryDetect;
    case Task::kLevel: return detail::kRegistryLevel;
    case Task::kContext: return detail::kRegistryContext;
    case Task::kMotive: return detail::kRegistryMotive;
    case Task::kConsequence: return detail::kRegistryConsequence;
  }
  return {};
}

}  // namespace

LabelRegistry::LabelRegistry(Task task, std::vector<Entry> entries)
    : task_(task), entries_(std::move(entries)) {
  if (entries_.empty()) {
    fail(ErrorKind::kValidation, "registry for '" + std::string(to_string(task)) + "' is empty");
  }
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    if (e.label.empty()) fail(ErrorKind::kValidation, "empty label in registry");
    if (!seen.insert(e.label).second) {
      fail(ErrorKind::kValidation, "duplicate label in registry: '" + e.label + "'");
    }
  }
}

LabelRegistry LabelRegistry::parse(Task task, std::string_view text) {
  std::vector<Entry> entries;
  for (const auto& raw : text::split(text, '\n')) {
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    Entry entry;
    const auto tab = line.find('\t');
    entry.label = text::trim(line.substr(0, tab));
    if (tab != std::string::npos) {
      entry.description = text::trim(line.substr(tab + 1));
      if (entry.description.starts_with(kUnverifiedTag)) {
        entry.unverified = true;
        entry.description = text::trim(entry.description.substr(kUnverifiedTag.size()));
      }
    }
    entries.push_back(std::move(entry));
  }
  return LabelRegistry(task, std::move(entries));
}

LabelRegistry LabelRegistry::load(Task task, const std::filesystem::path& path) {
  return parse(task, text::read_file(path));
}

const LabelRegistry& LabelRegistry::builtin(Task task) {
  static const std::array<LabelRegistry, 5> kBuiltin = {
      parse(Task::kDetect, builtin_text(Task::kDetect)),
      parse(Task::kLevel, builtin_text(Task::kLevel)),
      parse(Task::kContext, builtin_text(Task::kContext)),
      parse(Task::kMotive, builtin_text(Task::kMotive)),
      parse(Task::kConsequence, builtin_text(Task::kConsequence)),
  };
  return kBuiltin[static_cast<std::size_t>(task)];
}

std::vector<std::string> LabelRegistry::labels() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.label);
  return out;
}

std::optional<std::size_t> LabelRegistry::index_of(std::string_view label) const noexcept {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].label == label) return i;
  }
  return std::nullopt;
}

std::size_t LabelRegistry::require(std::string_view label) const {
  if (auto idx = index_of(label)) return *idx;
  fail(ErrorKind::kValidation, "label '" + std::string(label) + "' is not in the " +
                                   std::string(to_string(task_)) + " registry");
}

std::string LabelRegistry::to_text() const {
  std::string out;
  for (const auto& e : entries_) {
    out += e.label;
    if (!e.description.empty() || e.unverified) {
      out += '\t';
      if (e.unverified) out += std::string(kUnverifiedTag) + " ";
      out += e.description;
    }
    out += '\n';
  }
  return out;
}

Registries::Registries() {
  for (Task t : kAllTasks) by_task_[static_cast<std::size_t>(t)] = LabelRegistry::builtin(t);
}

Registries Registries::load_dir(const std::filesystem::path& dir) {
  Registries out;
  for (Task t : kAllTasks) {
    const auto path = dir / (std::string(to_string(t)) + ".txt");
    if (std::filesystem::exists(path)) out.set(LabelRegistry::load(t, path));
  }
  return out;
}

void Registries::set(LabelRegistry registry) {
  if (registry.task() == Task::kDetect) {
    const auto labels = registry.labels();
    if (labels.size() != 2 || !registry.contains(kViolent) || !registry.contains(kNonViolent)) {
      fail(ErrorKind::kValidation, "detect registry must be exactly {violent, nonviolent}");
    }
  }
  by_task_[static_cast<std::size_t>(registry.task())] = std::move(registry);
}

}  // namespace strife
