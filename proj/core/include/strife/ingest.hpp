#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "strife/registry.hpp"
#include "strife/types.hpp"

namespace strife::ingest {

struct ParsedCorpus {
  /// Ordered by (work_id, chapter, section).
  std::vector<Passage> passages;
  /// Non-fatal findings such as empty sections, with file and line.
  std::vector<std::string> warnings;
};

/// Parses section-structured text files. Each file holds one work; sections
/// start with a header line "@@ <work_id> <chapter>.<section>". Files ending
/// in ".jsonl" are read as passage records instead.
ParsedCorpus parse_corpus(std::span<const std::filesystem::path> files);

/// Parses one in-memory text file; `origin` names it in error messages.
ParsedCorpus parse_corpus_text(std::string_view contents, std::string_view origin);

/// Expands directories into their *.txt and *.jsonl files (sorted).
std::vector<std::filesystem::path> collect_corpus_files(std::span<const std::filesystem::path> inputs);

struct UnmatchedEvent {
  std::string event_id;
  std::string reason;  // "work absent", "section absent", "malformed ref"

  bool operator==(const UnmatchedEvent&) const = default;
};

struct AlignmentReport {
  std::size_t total_events = 0;
  std::size_t matched = 0;
  std::vector<UnmatchedEvent> unmatched;
  std::size_t violent_passages = 0;
  /// Passages of annotated works that no event marks violent.
  std::size_t nonviolent_passages = 0;
  /// Distinct refs of passages marked violent, sorted.
  std::set<SourceRef> violent_refs;
  /// Works referenced by at least one event (matched or not) and present in the corpus.
  std::set<std::string> annotated_works;
};

/// Resolves every event ref against the passages. An event marks exactly the
/// section named in its ref; refs absent from the corpus are reported, never guessed.
AlignmentReport align_events(std::span<const CuratedEvent> events, std::span<const Passage> passages);

/// Passages whose refs are not violent. With `annotated_works` set, passages of
/// works outside it are dropped as well: a work nobody annotated says nothing
/// about which of its sections are non-violent.
std::vector<Passage> extract_negatives(std::span<const Passage> passages, const std::set<SourceRef>& violent_refs,
                                       const std::optional<std::set<std::string>>& annotated_works = std::nullopt);

/// The violent passages, in corpus order.
std::vector<Passage> select_violent(std::span<const Passage> passages, const std::set<SourceRef>& violent_refs);

/// Throws Error(kValidation) when an event carries a label outside its registry.
void validate_events(std::span<const CuratedEvent> events, const Registries& registries);

struct IngestResult {
  ParsedCorpus corpus;
  std::vector<CuratedEvent> events;
  AlignmentReport report;
  std::vector<Passage> violent;
  /// Non-violent passages of annotated works.
  std::vector<Passage> nonviolent;
};

/// Parses the corpus files, reads and validates the events JSONL, aligns them
/// and extracts both classes.
IngestResult run(std::span<const std::filesystem::path> corpus_inputs, const std::filesystem::path& events_path,
                 const Registries& registries = {});

}  // namespace strife::ingest
