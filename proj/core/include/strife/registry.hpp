#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "strife/types.hpp"

namespace strife {

/// Ordered, closed set of labels for one task. Order matters: it defines the
/// class index of model outputs and the tie-break order of baselines.
class LabelRegistry {
 public:
  struct Entry {
    std::string label;
    std::string description;
    bool unverified = false;
  };

  LabelRegistry() = default;
  LabelRegistry(Task task, std::vector<Entry> entries);

  /// Parses "label<TAB>description" lines; '#' starts a comment line.
  static LabelRegistry parse(Task task, std::string_view text);
  static LabelRegistry load(Task task, const std::filesystem::path& path);
  /// The taxonomy compiled into the library.
  static const LabelRegistry& builtin(Task task);

  Task task() const noexcept { return task_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::vector<std::string> labels() const;
  const std::string& label(std::size_t index) const { return entries_.at(index).label; }

  bool contains(std::string_view label) const noexcept { return index_of(label).has_value(); }
  std::optional<std::size_t> index_of(std::string_view label) const noexcept;
  /// Throws Error(kValidation) when the label is not part of this registry.
  std::size_t require(std::string_view label) const;

  std::string to_text() const;

 private:
  Task task_ = Task::kDetect;
  std::vector<Entry> entries_;
};

/// One registry per task.
class Registries {
 public:
  Registries();  // builtin defaults

  /// Reads <dir>/<task>.txt for each task; tasks without a file keep the default.
  static Registries load_dir(const std::filesystem::path& dir);

  const LabelRegistry& get(Task task) const { return by_task_[static_cast<std::size_t>(task)]; }
  void set(LabelRegistry registry);

 private:
  std::array<LabelRegistry, 5> by_task_;
};

}  // namespace strife
