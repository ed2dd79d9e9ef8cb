#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strife/types.hpp"

namespace strife::jsonl {

using nlohmann::json;

/// Parses one JSON object per non-blank line. Errors carry file and line.
std::vector<json> read(const std::filesystem::path& path);
std::vector<json> parse(std::string_view contents, std::string_view origin = "<memory>");
std::string dump(const std::vector<json>& rows);
void write(const std::filesystem::path& path, const std::vector<json>& rows);

// passages {id, work_id, chapter, section, text, lang}
json to_json(const Passage& p);
Passage passage_from_json(const json& j);

// events {id, title, work_id, chapter, section, translation_text, level, context,
//         motive, consequence, extras}
json to_json(const CuratedEvent& e);
CuratedEvent event_from_json(const json& j);

// verdicts {prediction_id, decision, corrected_label?, reviewer}
json to_json(const ReviewVerdict& v);
ReviewVerdict verdict_from_json(const json& j);

json to_json(const Prediction& p);

// dataset rows {id, text, task, label, provenance, split, seed}, plus
// source_id, parent_id and work_id for leakage checks and stratification.
json to_json(const LabeledExample& e, std::string_view split, std::uint64_t seed);
json to_json(const LabeledExample& e);
LabeledExample example_from_json(const json& j);

/// Row of an evaluation input file: {passage_id, task, gold, pred}.
struct ScoredRow {
  std::string passage_id;
  Task task = Task::kDetect;
  std::optional<std::string> gold;
  std::optional<std::string> pred;
};
ScoredRow scored_row_from_json(const json& j);

template <typename T>
std::vector<T> read_as(const std::filesystem::path& path, const std::function<T(const json&)>& conv) {
  std::vector<T> out;
  for (const auto& row : read(path)) out.push_back(conv(row));
  return out;
}

}  // namespace strife::jsonl
