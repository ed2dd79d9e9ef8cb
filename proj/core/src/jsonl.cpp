#include "strife/jsonl.hpp"

#include "strife/errors.hpp"
#include "strife/text.hpp"

namespace strife::jsonl {
namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) {
    fail(ErrorKind::kValidation, std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

std::string string_field(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) fail(ErrorKind::kValidation, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::string optional_string(const json& j, const char* key, std::string fallback = {}) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).is_string() ? j.at(key).get<std::string>() : j.at(key).dump();
}

int int_field(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    try {
      std::size_t used = 0;
      const int value = std::stoi(v.get<std::string>(), &used);
      if (used == v.get<std::string>().size()) return value;
    } catch (const std::exception&) {
    }
  }
  fail(ErrorKind::kValidation, std::string("field '") + key + "' must be an integer");
}

SourceRef ref_from(const json& j) {
  return SourceRef{string_field(j, "work_id"), int_field(j, "chapter"), int_field(j, "section")};
}

}  // namespace

std::vector<json> parse(std::string_view contents, std::string_view origin) {
  std::vector<json> rows;
  std::size_t line_no = 0;
  for (const auto& line : text::split(contents, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      fail(ErrorKind::kParse,
           std::string(origin) + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    if (!rows.back().is_object()) {
      fail(ErrorKind::kParse, std::string(origin) + ":" + std::to_string(line_no) +
                                  ": expected a JSON object");
    }
  }
  return rows;
}

std::vector<json> read(const std::filesystem::path& path) {
  return parse(text::read_file(path), path.string());
}

std::string dump(const std::vector<json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

void write(const std::filesystem::path& path, const std::vector<json>& rows) {
  text::write_file_atomic(path, dump(rows));
}

json to_json(const Passage& p) {
  return json{{"id", p.id},         {"work_id", p.ref.work_id}, {"chapter", p.ref.chapter},
              {"section", p.ref.section}, {"text", p.text},   {"lang", p.lang}};
}

Passage passage_from_json(const json& j) {
  Passage p;
  p.ref = ref_from(j);
  p.id = optional_string(j, "id", passage_id_for(p.ref));
  p.text = string_field(j, "text");
  p.lang = optional_string(j, "lang", "en");
  return p;
}

json to_json(const CuratedEvent& e) {
  json extras = json::object();
  for (const auto& [k, v] : e.extras) extras[k] = v;
  return json{{"id", e.id},
              {"title", e.title},
              {"work_id", e.ref.work_id},
              {"chapter", e.ref.chapter},
              {"section", e.ref.section},
              {"translation_text", e.translation_text},
              {"level", e.level},
              {"context", e.context},
              {"motive", e.motive},
              {"consequence", e.consequence},
              {"extras", extras}};
}

CuratedEvent event_from_json(const json& j) {
  CuratedEvent e;
  e.id = string_field(j, "id");
  e.title = optional_string(j, "title");
  e.ref = ref_from(j);
  e.translation_text = string_field(j, "translation_text");
  e.level = optional_string(j, "level");
  e.context = optional_string(j, "context");
  e.motive = optional_string(j, "motive");
  e.consequence = optional_string(j, "consequence");
  if (j.contains("extras") && j.at("extras").is_object()) {
    for (const auto& [k, v] : j.at("extras").items()) {
      e.extras[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return e;
}

json to_json(const ReviewVerdict& v) {
  json j{{"id", v.id},
         {"prediction_id", v.prediction_id},
         {"decision", to_string(v.decision)},
         {"reviewer", v.reviewer},
         {"created_at", v.created_at}};
  if (v.corrected_label) j["corrected_label"] = *v.corrected_label;
  return j;
}

ReviewVerdict verdict_from_json(const json& j) {
  ReviewVerdict v;
  v.id = optional_string(j, "id");
  v.prediction_id = string_field(j, "prediction_id");
  v.decision = parse_decision(string_field(j, "decision"));
  if (j.contains("corrected_label") && j.at("corrected_label").is_string()) {
    v.corrected_label = j.at("corrected_label").get<std::string>();
  }
  v.reviewer = optional_string(j, "reviewer");
  v.created_at = optional_string(j, "created_at");
  return v;
}

json to_json(const Prediction& p) {
  return json{{"id", p.id},
              {"passage_id", p.passage_id},
              {"task", to_string(p.task)},
              {"label", p.label},
              {"score", p.score},
              {"probabilities", p.probabilities},
              {"model_id", p.model_id},
              {"created_at", p.created_at},
              {"truncated", p.truncated},
              {"job_id", p.job_id}};
}

json to_json(const LabeledExample& e) {
  json j{{"id", e.id},
         {"source_id", e.source_id},
         {"text", e.text},
         {"task", to_string(e.task)},
         {"label", e.label},
         {"provenance", e.provenance.to_string()},
         {"work_id", e.work_id}};
  if (e.parent_id) j["parent_id"] = *e.parent_id;
  return j;
}

json to_json(const LabeledExample& e, std::string_view split, std::uint64_t seed) {
  auto j = to_json(e);
  j["split"] = split;
  j["seed"] = seed;
  return j;
}

LabeledExample example_from_json(const json& j) {
  LabeledExample e;
  e.id = string_field(j, "id");
  e.source_id = optional_string(j, "source_id", e.id);
  e.text = string_field(j, "text");
  e.task = parse_task(string_field(j, "task"));
  e.label = string_field(j, "label");
  e.provenance = Provenance::parse(optional_string(j, "provenance", "original"));
  if (j.contains("parent_id") && j.at("parent_id").is_string()) {
    e.parent_id = j.at("parent_id").get<std::string>();
  }
  e.work_id = optional_string(j, "work_id");
  return e;
}

ScoredRow scored_row_from_json(const json& j) {
  ScoredRow row;
  row.passage_id = j.contains("passage_id") ? string_field(j, "passage_id") : string_field(j, "id");
  row.task = parse_task(optional_string(j, "task", "detect"));
  if (j.contains("gold") && j.at("gold").is_string()) row.gold = j.at("gold").get<std::string>();
  if (j.contains("pred") && j.at("pred").is_string()) row.pred = j.at("pred").get<std::string>();
  return row;
}

}  // namespace strife::jsonl
