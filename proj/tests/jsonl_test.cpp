#include <gtest/gtest.h>

#include "strife/errors.hpp"
#include "strife/jsonl.hpp"
#include "strife/text.hpp"
#include "test_support.hpp"

namespace strife::jsonl {
namespace {

TEST(Jsonl, SkipsBlankLines) {
  const auto rows = parse("{\"a\":1}\n\n  \n{\"a\":2}\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1]["a"], 2);
}

TEST(Jsonl, ErrorsNameOriginAndLine) {
  try {
    parse("{\"a\":1}\nnot json\n", "rows.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("rows.jsonl:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse("[1,2]\n"), Error);
}

TEST(Jsonl, PassageRoundTrip) {
  const Passage p{"Alexander:51.5", {"Alexander", 51, 5}, "He ran him through.", "en"};
  EXPECT_EQ(passage_from_json(to_json(p)), p);
}

TEST(Jsonl, PassageIdDefaultsToRef) {
  const auto p = passage_from_json(json{{"work_id", "Caesar"}, {"chapter", 3}, {"section", 2}, {"text", "x"}});
  EXPECT_EQ(p.id, "Caesar:3.2");
  EXPECT_EQ(p.lang, "en");
}

TEST(Jsonl, EventRoundTrip) {
  CuratedEvent e;
  e.id = "eris-00001";
  e.title = "Cleitus";
  e.ref = {"Alexander", 51, 5};
  e.translation_text = "text";
  e.level = "interpersonal";
  e.context = "civilian";
  e.motive = "emotional";
  e.consequence = "death";
  e.extras = {{"weapon", "spear"}, {"year", "-328"}};
  EXPECT_EQ(event_from_json(to_json(e)), e);
}

TEST(Jsonl, ExampleRoundTripKeepsProvenance) {
  auto e = testing::example("x#p2", "paraphrased", "violent");
  e.provenance = Provenance::paraphrase(2);
  e.parent_id = "x";
  e.source_id = "Alexander:1.1";
  e.work_id = "Alexander";
  const auto j = to_json(e, "train", 13);
  EXPECT_EQ(j["split"], "train");
  EXPECT_EQ(j["seed"], 13);
  EXPECT_EQ(j["provenance"], "paraphrase(2)");
  EXPECT_EQ(example_from_json(j), e);
}

TEST(Jsonl, ExampleRejectsBadFields) {
  EXPECT_THROW(example_from_json(json{{"id", "a"}, {"text", "t"}, {"task", "detect"}}), Error);
  EXPECT_THROW(example_from_json(json{{"id", "a"}, {"text", "t"}, {"task", "mood"}, {"label", "x"}}), Error);
}

TEST(Jsonl, VerdictRoundTrip) {
  ReviewVerdict v;
  v.prediction_id = "pred-1";
  v.decision = Decision::kRelabel;
  v.corrected_label = "nonviolent";
  v.reviewer = "historian";
  const auto back = verdict_from_json(to_json(v));
  EXPECT_EQ(back.prediction_id, v.prediction_id);
  EXPECT_EQ(back.decision, v.decision);
  EXPECT_EQ(back.corrected_label, v.corrected_label);
  EXPECT_EQ(back.reviewer, v.reviewer);
}

TEST(Jsonl, ScoredRows) {
  const auto row = scored_row_from_json(json{{"passage_id", "p1"}, {"task", "level"}, {"gold", "intersocial"}});
  EXPECT_EQ(row.task, Task::kLevel);
  EXPECT_EQ(row.gold, "intersocial");
  EXPECT_FALSE(row.pred);
  EXPECT_EQ(scored_row_from_json(json{{"id", "p2"}, {"pred", "violent"}}).passage_id, "p2");
}

TEST(Jsonl, FileRoundTrip) {
  testing::TempDir dir;
  const std::vector<json> rows{{{"a", "\xce\xb1"}}, {{"b", 2}}};
  write(dir / "rows.jsonl", rows);
  EXPECT_EQ(read(dir / "rows.jsonl"), rows);
}

}  // namespace
}  // namespace strife::jsonl
