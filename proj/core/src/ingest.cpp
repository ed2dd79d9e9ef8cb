#include "strife/ingest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <map>

#include "strife/errors.hpp"
#include "strife/jsonl.hpp"
#include "strife/text.hpp"

namespace strife::ingest {
namespace {

constexpr std::string_view kHeaderMarker = "@@";

bool parse_positive(std::string_view digits, int& out) {
  if (digits.empty()) return false;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  return ec == std::errc{} && ptr == digits.data() + digits.size() && out >= 1;
}

// "@@ Alexander 51.5" -> SourceRef; work ids may contain inner spaces.
std::optional<SourceRef> parse_header(std::string_view line) {
  const auto body = text::normalize_whitespace(line.substr(kHeaderMarker.size()));
  const auto last_space = body.rfind(' ');
  if (last_space == std::string::npos || last_space == 0) return std::nullopt;
  const std::string_view ref_part = std::string_view(body).substr(last_space + 1);
  const auto dot = ref_part.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  SourceRef ref;
  ref.work_id = body.substr(0, last_space);
  if (!parse_positive(ref_part.substr(0, dot), ref.chapter)) return std::nullopt;
  if (!parse_positive(ref_part.substr(dot + 1), ref.section)) return std::nullopt;
  return ref;
}

[[noreturn]] void parse_error(std::string_view origin, std::size_t line, const std::string& what) {
  fail(ErrorKind::kParse, std::string(origin) + ":" + std::to_string(line) + ": " + what);
}

void sort_passages(std::vector<Passage>& passages) {
  std::sort(passages.begin(), passages.end(),
            [](const Passage& a, const Passage& b) { return a.ref < b.ref; });
}

}  // namespace

ParsedCorpus parse_corpus_text(std::string_view contents, std::string_view origin) {
  ParsedCorpus out;
  std::optional<SourceRef> current;
  std::size_t header_line = 0;
  std::string body;
  std::map<SourceRef, std::size_t> seen;

  auto flush = [&] {
    if (!current) return;
    auto normalized = text::normalize_whitespace(body);
    if (normalized.empty()) {
      out.warnings.push_back(std::string(origin) + ":" + std::to_string(header_line) + ": empty section " +
                             current->display() + " skipped");
      spdlog::warn("{}", out.warnings.back());
    } else {
      out.passages.push_back(Passage{passage_id_for(*current), *current, std::move(normalized), "en"});
    }
    body.clear();
  };

  std::size_t line_no = 0;
  for (const auto& raw : text::split(contents, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.starts_with(kHeaderMarker)) {
      auto ref = parse_header(line);
      if (!ref) parse_error(origin, line_no, "malformed section header '" + std::string(line) + "'");
      if (current && ref->work_id != current->work_id) {
        parse_error(origin, line_no, "file mixes works '" + current->work_id + "' and '" + ref->work_id + "'");
      }
      if (auto it = seen.find(*ref); it != seen.end()) {
        parse_error(origin, line_no,
                    "duplicate section " + ref->display() + " (first at line " + std::to_string(it->second) + ")");
      }
      flush();
      seen.emplace(*ref, line_no);
      current = std::move(ref);
      header_line = line_no;
      continue;
    }
    if (!current) {
      if (!text::trim(line).empty()) parse_error(origin, line_no, "text before the first section header");
      continue;
    }
    body += line;
    body += '\n';
  }
  flush();
  sort_passages(out.passages);
  return out;
}

ParsedCorpus parse_corpus(std::span<const std::filesystem::path> files) {
  ParsedCorpus out;
  std::map<SourceRef, std::string> origin_of;
  for (const auto& path : files) {
    ParsedCorpus part;
    if (path.extension() == ".jsonl") {
      for (const auto& row : jsonl::read(path)) {
        auto p = jsonl::passage_from_json(row);
        p.text = text::normalize_whitespace(p.text);
        if (!p.ref.well_formed()) fail(ErrorKind::kParse, path.string() + ": malformed ref in passage '" + p.id + "'");
        if (p.text.empty()) {
          part.warnings.push_back(path.string() + ": empty passage " + p.ref.display() + " skipped");
          spdlog::warn("{}", part.warnings.back());
          continue;
        }
        part.passages.push_back(std::move(p));
      }
    } else {
      part = parse_corpus_text(text::read_file(path), path.string());
    }
    for (auto& p : part.passages) {
      auto [it, inserted] = origin_of.emplace(p.ref, path.string());
      if (!inserted) {
        fail(ErrorKind::kParse, "section " + p.ref.display() + " appears in both " + it->second + " and " +
                                    path.string());
      }
      out.passages.push_back(std::move(p));
    }
    out.warnings.insert(out.warnings.end(), part.warnings.begin(), part.warnings.end());
  }
  sort_passages(out.passages);
  return out;
}

std::vector<std::filesystem::path> collect_corpus_files(std::span<const std::filesystem::path> inputs) {
  std::vector<std::filesystem::path> files;
  for (const auto& input : inputs) {
    if (std::filesystem::is_directory(input)) {
      std::vector<std::filesystem::path> found;
      for (const auto& entry : std::filesystem::directory_iterator(input)) {
        const auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".txt" || ext == ".jsonl")) found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (std::filesystem::exists(input)) {
      files.push_back(input);
    } else {
      fail(ErrorKind::kNotFound, "corpus input not found: " + input.string());
    }
  }
  return files;
}

AlignmentReport align_events(std::span<const CuratedEvent> events, std::span<const Passage> passages) {
  AlignmentReport report;
  std::set<SourceRef> refs;
  std::set<std::string> works;
  for (const auto& p : passages) {
    refs.insert(p.ref);
    works.insert(p.ref.work_id);
  }
  for (const auto& e : events) {
    ++report.total_events;
    if (!e.ref.well_formed()) {
      report.unmatched.push_back({e.id, "malformed ref"});
      continue;
    }
    if (!works.contains(e.ref.work_id)) {
      report.unmatched.push_back({e.id, "work absent"});
      continue;
    }
    report.annotated_works.insert(e.ref.work_id);
    if (!refs.contains(e.ref)) {
      report.unmatched.push_back({e.id, "section absent"});
      continue;
    }
    ++report.matched;
    report.violent_refs.insert(e.ref);
  }
  report.violent_passages = report.violent_refs.size();
  for (const auto& p : passages) {
    if (report.annotated_works.contains(p.ref.work_id) && !report.violent_refs.contains(p.ref)) {
      ++report.nonviolent_passages;
    }
  }
  return report;
}

std::vector<Passage> extract_negatives(std::span<const Passage> passages, const std::set<SourceRef>& violent_refs,
                                       const std::optional<std::set<std::string>>& annotated_works) {
  std::vector<Passage> out;
  for (const auto& p : passages) {
    if (violent_refs.contains(p.ref)) continue;
    if (annotated_works && !annotated_works->contains(p.ref.work_id)) continue;
    out.push_back(p);
  }
  return out;
}

std::vector<Passage> select_violent(std::span<const Passage> passages, const std::set<SourceRef>& violent_refs) {
  std::vector<Passage> out;
  for (const auto& p : passages) {
    if (violent_refs.contains(p.ref)) out.push_back(p);
  }
  return out;
}

void validate_events(std::span<const CuratedEvent> events, const Registries& registries) {
  for (const auto& e : events) {
    for (Task t : kCategorizationTasks) {
      const auto& label = e.label_for(t);
      if (!label.empty() && !registries.get(t).contains(label)) {
        fail(ErrorKind::kValidation, "event '" + e.id + "' has unknown " + std::string(to_string(t)) + " label '" +
                                         label + "'");
      }
    }
  }
}

IngestResult run(std::span<const std::filesystem::path> corpus_inputs, const std::filesystem::path& events_path,
                 const Registries& registries) {
  IngestResult out;
  const auto files = collect_corpus_files(corpus_inputs);
  if (files.empty()) fail(ErrorKind::kNotFound, "no corpus files (*.txt, *.jsonl) found in the given inputs");
  out.corpus = parse_corpus(files);
  out.events = jsonl::read_as<CuratedEvent>(events_path, jsonl::event_from_json);
  validate_events(out.events, registries);
  out.report = align_events(out.events, out.corpus.passages);
  out.violent = select_violent(out.corpus.passages, out.report.violent_refs);
  out.nonviolent = extract_negatives(out.corpus.passages, out.report.violent_refs, out.report.annotated_works);
  return out;
}

}  // namespace strife::ingest
