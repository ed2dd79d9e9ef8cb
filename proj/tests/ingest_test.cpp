#include <gtest/gtest.h>

#include "strife/errors.hpp"
#include "strife/ingest.hpp"
#include "strife/jsonl.hpp"
#include "strife/text.hpp"
#include "test_support.hpp"

namespace strife::ingest {
namespace {

std::string parse_error_of(std::string_view contents) {
  try {
    parse_corpus_text(contents, "lives/alex.txt");
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    return e.what();
  }
  ADD_FAILURE() << "no parse error";
  return {};
}

CuratedEvent event(std::string id, SourceRef ref) {
  CuratedEvent e;
  e.id = std::move(id);
  e.ref = std::move(ref);
  e.translation_text = "text";
  return e;
}

Passage passage(std::string work, int ch, int sec) {
  SourceRef ref{std::move(work), ch, sec};
  return Passage{passage_id_for(ref), ref, "text of " + ref.display(), "en"};
}

TEST(ParseCorpusText, SplitsSectionsAndNormalizesText) {
  const auto parsed =
      parse_corpus_text("\n@@ Alexander 2.1\nFirst   line\ncontinues.\r\n@@ Alexander 1.3\nEarlier.\n", "a.txt");
  ASSERT_EQ(parsed.passages.size(), 2u);
  EXPECT_EQ(parsed.passages[0].id, "Alexander:1.3");
  EXPECT_EQ(parsed.passages[0].text, "Earlier.");
  EXPECT_EQ(parsed.passages[1].text, "First line continues.");
  EXPECT_TRUE(parsed.warnings.empty());
}

TEST(ParseCorpusText, WorkIdsMayContainSpaces) {
  const auto parsed = parse_corpus_text("@@  Cato  Minor  12.4 \nHe stabbed himself.\n", "c.txt");
  ASSERT_EQ(parsed.passages.size(), 1u);
  EXPECT_EQ(parsed.passages[0].ref, (SourceRef{"Cato Minor", 12, 4}));
}

TEST(ParseCorpusText, EmptySectionWarns) {
  const auto parsed = parse_corpus_text("@@ Alexander 1.1\n\n  \n@@ Alexander 1.2\nText.\n", "a.txt");
  ASSERT_EQ(parsed.passages.size(), 1u);
  ASSERT_EQ(parsed.warnings.size(), 1u);
  EXPECT_NE(parsed.warnings[0].find("a.txt:1"), std::string::npos) << parsed.warnings[0];
}

TEST(ParseCorpusText, ErrorsCarryOriginAndLine) {
  EXPECT_NE(parse_error_of("@@ Alexander 1.1\nok\n@@ Alexander one.two\n").find("lives/alex.txt:3"),
            std::string::npos);
  EXPECT_NE(parse_error_of("@@ Alexander 0.1\n").find("lives/alex.txt:1"), std::string::npos);
  EXPECT_NE(parse_error_of("@@ 1.1\n").find("malformed"), std::string::npos);
  EXPECT_NE(parse_error_of("@@ Alexander 1.1\nx\n@@ Caesar 1.1\ny\n").find("mixes works"), std::string::npos);
  EXPECT_NE(parse_error_of("@@ Alexander 1.1\nx\n@@ Alexander 1.1\ny\n").find("duplicate section"),
            std::string::npos);
  EXPECT_NE(parse_error_of("preface\n@@ Alexander 1.1\nx\n").find("before the first section header"),
            std::string::npos);
}

TEST(ParseCorpus, RejectsSectionsRepeatedAcrossFiles) {
  testing::TempDir dir;
  text::write_file_atomic(dir / "a.txt", "@@ Alexander 1.1\nx\n");
  text::write_file_atomic(dir / "b.txt", "@@ Alexander 1.1\ny\n");
  const std::vector<std::filesystem::path> files{dir / "a.txt", dir / "b.txt"};
  EXPECT_THROW(parse_corpus(files), Error);
}

TEST(ParseCorpus, ReadsJsonlPassages) {
  testing::TempDir dir;
  text::write_file_atomic(dir / "extra.jsonl",
                          "{\"work_id\":\"Nicias\",\"chapter\":1,\"section\":2,\"text\":\"He was  pious.\"}\n");
  text::write_file_atomic(dir / "a.txt", "@@ Alexander 1.1\nx\n");
  text::write_file_atomic(dir / "notes.md", "ignored");
  const std::vector<std::filesystem::path> inputs{dir.path()};
  const auto files = collect_corpus_files(inputs);
  ASSERT_EQ(files.size(), 2u);
  const auto parsed = parse_corpus(files);
  ASSERT_EQ(parsed.passages.size(), 2u);
  EXPECT_EQ(parsed.passages[1].id, "Nicias:1.2");
  EXPECT_EQ(parsed.passages[1].text, "He was pious.");
  const std::vector<std::filesystem::path> missing{dir / "nope"};
  EXPECT_THROW(collect_corpus_files(missing), Error);
}

TEST(AlignEvents, ReportsEveryUnmatchedReason) {
  const std::vector<Passage> ps{passage("Alexander", 1, 1), passage("Alexander", 1, 2), passage("Caesar", 1, 1),
                                passage("Nicias", 1, 1)};
  const std::vector<CuratedEvent> events{event("e1", {"Alexander", 1, 1}), event("e2", {"Alexander", 1, 1}),
                                         event("e3", {"Alexander", 9, 9}), event("e4", {"Thucydides", 1, 1}),
                                         event("e5", {"Caesar", 0, 1}),    event("e6", {"Caesar", 1, 1})};
  const auto report = align_events(events, ps);
  EXPECT_EQ(report.total_events, 6u);
  EXPECT_EQ(report.matched, 3u);
  EXPECT_EQ(report.unmatched, (std::vector<UnmatchedEvent>{
                                  {"e3", "section absent"}, {"e4", "work absent"}, {"e5", "malformed ref"}}));
  EXPECT_EQ(report.violent_passages, 2u) << "two events on one section mark it once";
  EXPECT_EQ(report.annotated_works, (std::set<std::string>{"Alexander", "Caesar"}));
  EXPECT_EQ(report.nonviolent_passages, 1u) << "Nicias is not annotated";

  const auto negatives = extract_negatives(ps, report.violent_refs, report.annotated_works);
  ASSERT_EQ(negatives.size(), 1u);
  EXPECT_EQ(negatives[0].id, "Alexander:1.2");
  EXPECT_EQ(extract_negatives(ps, report.violent_refs).size(), 2u);
  EXPECT_EQ(select_violent(ps, report.violent_refs).size(), 2u);
}

TEST(AlignEvents, ClassesPartitionAnnotatedWorks) {
  const auto& data = testing::fixture_data();
  const auto& r = data.ingested;
  std::set<std::string> ids;
  for (const auto& p : r.violent) ids.insert(p.id);
  for (const auto& p : r.nonviolent) EXPECT_FALSE(ids.contains(p.id)) << p.id;
  std::size_t annotated = 0;
  for (const auto& p : r.corpus.passages) annotated += r.report.annotated_works.contains(p.ref.work_id);
  EXPECT_EQ(r.violent.size() + r.nonviolent.size(), annotated);
}

TEST(ValidateEvents, RejectsUnknownLabels) {
  auto e = event("e1", {"Alexander", 1, 1});
  e.motive = "boredom";
  const std::vector<CuratedEvent> events{e};
  EXPECT_THROW(validate_events(events, Registries{}), Error);
  e.motive.clear();
  const std::vector<CuratedEvent> unlabeled{e};
  EXPECT_NO_THROW(validate_events(unlabeled, Registries{}));
}

TEST(Run, IngestsTheFixture) {
  const auto& r = testing::fixture_data().ingested;
  EXPECT_EQ(r.corpus.passages.size(), 2564u);
  EXPECT_EQ(r.events.size(), 2780u);
  EXPECT_EQ(r.report.matched, fixture::kPlutarchEvents);
  EXPECT_EQ(r.violent.size(), 461u);
  EXPECT_EQ(r.nonviolent.size(), 2103u);
  std::size_t absent_sections = 0;
  std::size_t absent_works = 0;
  for (const auto& u : r.report.unmatched) {
    absent_sections += u.reason == "section absent";
    absent_works += u.reason == "work absent";
  }
  EXPECT_EQ(absent_sections, fixture::kAbsentSectionEvents);
  EXPECT_EQ(absent_works, fixture::kOtherAuthorEvents);
}

TEST(Run, NoCorpusFilesIsNotFound) {
  testing::TempDir dir;
  text::write_file_atomic(dir / "events.jsonl", "");
  std::filesystem::create_directory(dir / "corpus");
  text::write_file_atomic(dir / "corpus" / "notes.md", "not a corpus file");
  const std::vector<std::filesystem::path> inputs{dir / "corpus"};
  try {
    run(inputs, dir / "events.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotFound);
  }
}

}  // namespace
}  // namespace strife::ingest
