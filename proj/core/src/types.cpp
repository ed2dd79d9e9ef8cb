#include "strife/types.hpp"

#include <charconv>

#include "strife/errors.hpp"

namespace strife {

std::string_view to_string(Task task) noexcept {
  switch (task) {
    case Task::kDetect: return "detect";
    case Task::kLevel: return "level";
    case Task::kContext: return "context";
    case Task::kMotive: return "motive";
    case Task::kConsequence: return "consequence";
  }
  return "detect";
}

Task parse_task(std::string_view name) {
  for (Task t : kAllTasks) {
    if (to_string(t) == name) return t;
  }
  fail(ErrorKind::kValidation, "unsupported task: '" + std::string(name) + "'");
}

bool is_categorization(Task task) noexcept { return task != Task::kDetect; }

std::string SourceRef::display() const {
  return work_id + " " + std::to_string(chapter) + "." + std::to_string(section);
}

std::string passage_id_for(const SourceRef& ref) {
  return ref.work_id + ":" + std::to_string(ref.chapter) + "." + std::to_string(ref.section);
}

const std::string& CuratedEvent::label_for(Task task) const {
  switch (task) {
    case Task::kLevel: return level;
    case Task::kContext: return context;
    case Task::kMotive: return motive;
    case Task::kConsequence: return consequence;
    case Task::kDetect: break;
  }
  fail(ErrorKind::kValidation, "curated events carry no detect label");
}

std::string_view to_string(Decision decision) noexcept {
  switch (decision) {
    case Decision::kAccept: return "accept";
    case Decision::kReject: return "reject";
    case Decision::kRelabel: return "relabel";
  }
  return "accept";
}

Decision parse_decision(std::string_view name) {
  if (name == "accept") return Decision::kAccept;
  if (name == "reject") return Decision::kReject;
  if (name == "relabel") return Decision::kRelabel;
  fail(ErrorKind::kValidation, "unknown decision: '" + std::string(name) + "'");
}

std::string Provenance::to_string() const {
  if (is_original()) return "original";
  return "paraphrase(" + std::to_string(paraphrase_index) + ")";
}

Provenance Provenance::parse(std::string_view text) {
  if (text == "original") return original();
  constexpr std::string_view kPrefix = "paraphrase(";
  if (text.starts_with(kPrefix) && text.ends_with(")")) {
    const auto digits = text.substr(kPrefix.size(), text.size() - kPrefix.size() - 1);
    int k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && k >= 1) return paraphrase(k);
  }
  fail(ErrorKind::kValidation, "bad provenance: '" + std::string(text) + "'");
}

}  // namespace strife
