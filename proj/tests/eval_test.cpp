#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "strife/errors.hpp"
#include "strife/eval.hpp"

namespace strife::eval {
namespace {

using Labels = std::vector<std::string>;

const LabelRegistry& abc() {
  static const auto r = LabelRegistry::parse(Task::kLevel, "a\nb\nc\n");
  return r;
}

// Direct counting oracle for one class.
struct Oracle {
  double p, r, f;
  std::size_t support;
};

Oracle oracle(const Labels& preds, const Labels& golds, const std::string& cls) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    tp += preds[i] == cls && golds[i] == cls;
    fp += preds[i] == cls && golds[i] != cls;
    fn += preds[i] != cls && golds[i] == cls;
  }
  const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
  const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
  return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0, tp + fn};
}

void expect_matches_oracle(const Labels& preds, const Labels& golds, const LabelRegistry& registry) {
  const auto report = evaluate(preds, golds, registry);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == golds[i];
  ASSERT_EQ(report.accuracy, double(correct) / double(preds.size()));
  double wp = 0, wr = 0, wf = 0;
  for (std::size_t k = 0; k < registry.size(); ++k) {
    const auto o = oracle(preds, golds, registry.label(k));
    const auto& m = report.classes[k];
    ASSERT_EQ(m.precision, o.p);
    ASSERT_EQ(m.recall, o.r);
    ASSERT_EQ(m.f1, o.f);
    ASSERT_EQ(m.support, o.support);
    const double w = double(o.support) / double(preds.size());
    wp += w * o.p;
    wr += w * o.r;
    wf += w * o.f;
  }
  ASSERT_NEAR(report.overall.precision, wp, 1e-12);
  ASSERT_NEAR(report.overall.recall, wr, 1e-12);
  ASSERT_NEAR(report.overall.f1, wf, 1e-12);
}

TEST(MetricOracle, AllThreeClassVectorsUpToLengthFive) {
  const auto labels = abc().labels();
  for (std::size_t len = 1; len <= 5; ++len) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < 2 * len; ++i) total *= 3;
    for (std::size_t code = 0; code < total; ++code) {
      Labels preds(len), golds(len);
      std::size_t c = code;
      for (std::size_t i = 0; i < len; ++i, c /= 3) preds[i] = labels[c % 3];
      for (std::size_t i = 0; i < len; ++i, c /= 3) golds[i] = labels[c % 3];
      expect_matches_oracle(preds, golds, abc());
    }
  }
}

// Metrics depend only on how many items fall into each (pred, gold) cell, so
// enumerating every cell composition covers every vector up to reordering;
// the permutation test below closes that gap.
TEST(MetricOracle, AllThreeClassCellCompositionsUpToLengthEight) {
  const auto labels = abc().labels();
  std::array<std::size_t, 9> cells{};
  std::size_t cases = 0;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t cell, std::size_t left) {
    if (cell == 8) {
      cells[8] = left;
      Labels preds, golds;
      for (std::size_t k = 0; k < 9; ++k) {
        for (std::size_t i = 0; i < cells[k]; ++i) {
          preds.push_back(labels[k / 3]);
          golds.push_back(labels[k % 3]);
        }
      }
      if (!preds.empty()) {
        expect_matches_oracle(preds, golds, abc());
        ++cases;
      }
      return;
    }
    for (std::size_t n = 0; n <= left; ++n) {
      cells[cell] = n;
      rec(cell + 1, left - n);
    }
  };
  for (std::size_t len = 1; len <= 8; ++len) rec(0, len);
  EXPECT_EQ(cases, 24309u);  // Σ_{n=1..8} C(n+8, 8) = C(17, 9) - 1
}

TEST(MetricOracle, InvariantUnderPermutation) {
  std::mt19937 rng(5);
  const auto labels = abc().labels();
  for (int trial = 0; trial < 200; ++trial) {
    Labels preds(8), golds(8);
    for (int i = 0; i < 8; ++i) {
      preds[i] = labels[rng() % 3];
      golds[i] = labels[rng() % 3];
    }
    const auto before = evaluate(preds, golds, abc());
    std::vector<std::size_t> order(8);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Labels p2, g2;
    for (auto i : order) {
      p2.push_back(preds[i]);
      g2.push_back(golds[i]);
    }
    const auto after = evaluate(p2, g2, abc());
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_EQ(before.classes[k].f1, after.classes[k].f1);
      EXPECT_EQ(before.classes[k].precision, after.classes[k].precision);
    }
  }
}

TEST(F1, ZeroOverZeroIsZero) {
  EXPECT_EQ(f1(0.0, 0.0), 0.0);
  EXPECT_EQ(precision(ClassCounts{0, 0, 3, 1}), 0.0);
  EXPECT_EQ(recall(ClassCounts{0, 2, 0, 1}), 0.0);
  EXPECT_EQ(f1(ClassCounts{0, 0, 0, 5}), 0.0);
}

TEST(F1, BoundedByPrecisionAndRecall) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double p = u(rng), r = u(rng);
    const double f = f1(p, r);
    EXPECT_LE(std::min(p, r), f + 1e-15);
    EXPECT_GE(std::max(p, r), f - 1e-15);
  }
}

TEST(F1, KnownValues) {
  EXPECT_NEAR(f1(0.87, 0.99), 0.9261, 1e-4);
  EXPECT_NEAR(f1(0.89, 0.86), 0.8747, 1e-4);
  EXPECT_EQ(f1(1.0, 1.0), 1.0);
}

TEST(Confusion, CountsAndValidation) {
  const auto& reg = LabelRegistry::builtin(Task::kDetect);
  const Labels preds{"violent", "violent", "nonviolent", "nonviolent"};
  const Labels golds{"violent", "nonviolent", "violent", "nonviolent"};
  const auto c = confusion(preds, golds, reg);
  EXPECT_EQ(c.of("violent"), (ClassCounts{1, 1, 1, 1}));
  EXPECT_EQ(c.correct, 2u);
  EXPECT_THROW(confusion(Labels{"violent"}, golds, reg), Error);
  EXPECT_THROW(confusion(Labels{}, Labels{}, reg), Error);
  EXPECT_THROW(confusion(Labels{"peaceful"}, Labels{"violent"}, reg), Error);
}

TEST(Baselines, MajorityOnTheDetectionTestMix) {
  Labels golds(371, "nonviolent");
  golds.insert(golds.end(), 129, "violent");
  const auto m = majority_baseline(golds, LabelRegistry::builtin(Task::kDetect));
  EXPECT_EQ(m.label, "nonviolent");
  EXPECT_NEAR(m.accuracy, 0.742, 1e-12);
  // (371² + 129²) / 500²
  EXPECT_NEAR(random_baseline(golds), 154282.0 / 250000.0, 1e-12);
}

TEST(Baselines, MajorityTieGoesToRegistryOrder) {
  const auto m = majority_baseline(Labels{"c", "b", "b", "c"}, abc());
  EXPECT_EQ(m.label, "b");
  EXPECT_EQ(m.accuracy, 0.5);
}

TEST(Baselines, RandomNeverExceedsMajority) {
  std::mt19937 rng(3);
  const auto labels = abc().labels();
  for (int trial = 0; trial < 2000; ++trial) {
    Labels golds(1 + rng() % 30);
    for (auto& g : golds) g = labels[rng() % 3];
    EXPECT_LE(random_baseline(golds), majority_baseline(golds, abc()).accuracy + 1e-12);
  }
}

TEST(Averages, MacroSkipsEmptyClasses) {
  const Labels preds{"a", "a", "b"};
  const Labels golds{"a", "b", "b"};
  const auto r = evaluate(preds, golds, abc());
  // a: P=1/2 R=1 F=2/3; b: P=1 R=1/2 F=2/3; c has no support.
  EXPECT_NEAR(r.macro.f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.macro.precision, 0.75, 1e-12);
  EXPECT_NEAR(r.overall.f1, 2.0 / 3.0, 1e-12);
}

TEST(McNemar, ExactTwoSidedBinomial) {
  EXPECT_NEAR(mcnemar(10, 2).p_value, 158.0 / 4096.0, 1e-12);
  EXPECT_NEAR(mcnemar(0, 5).p_value, 2.0 / 32.0, 1e-12);
  EXPECT_EQ(mcnemar(3, 3).p_value, 1.0);
  EXPECT_TRUE(mcnemar(0, 0).degenerate);
  EXPECT_EQ(mcnemar(0, 0).p_value, 1.0);
}

TEST(McNemar, SymmetricAndBounded) {
  for (std::size_t b = 0; b <= 40; ++b) {
    for (std::size_t c = 0; c <= 40; ++c) {
      const auto x = mcnemar(b, c);
      EXPECT_EQ(x.p_value, mcnemar(c, b).p_value);
      EXPECT_GE(x.p_value, 0.0);
      EXPECT_LE(x.p_value, 1.0);
    }
  }
  EXPECT_GT(mcnemar(2000, 1000).p_value, 0.0);
  EXPECT_LT(mcnemar(2000, 1000).p_value, 1e-20);
}

TEST(McNemar, FromPredictions) {
  const Labels golds{"a", "a", "b", "b", "c"};
  const Labels pa{"a", "a", "b", "c", "c"};
  const Labels pb{"a", "b", "c", "b", "c"};
  const auto r = mcnemar(pa, pb, golds);
  EXPECT_EQ(r.b, 2u);
  EXPECT_EQ(r.c, 1u);
  EXPECT_THROW(mcnemar(pa, Labels{"a"}, golds), Error);
}

TEST(Rounding, HalfUp) {
  EXPECT_EQ(round_half_up(0.125), 0.13);
  EXPECT_EQ(round_half_up(0.745), 0.75);
  EXPECT_EQ(round_half_up(0.6172), 0.62);
  EXPECT_EQ(round_half_up(0.9261), 0.93);
}

EvalReport detect_report() {
  const Labels preds{"violent", "nonviolent", "nonviolent", "nonviolent"};
  const Labels golds{"violent", "violent", "nonviolent", "nonviolent"};
  return evaluate(preds, golds, LabelRegistry::builtin(Task::kDetect), "m1");
}

TEST(Render, TextReportHasTableSections) {
  const auto r = detect_report();
  const auto text = render_report(std::span(&r, 1));
  for (const char* needle : {"Task: detect", "Model: m1", "Violent", "Non-Violent", "Overall", "Accuracy 0.75",
                             "Majority (all Violent) 0.50", "Random 0.50", "support-weighted"}) {
    EXPECT_NE(text.find(needle), std::string::npos) << needle << "\n" << text;
  }
  EXPECT_EQ(text.find("Macro"), std::string::npos);
  RenderOptions with_macro;
  with_macro.macro = true;
  EXPECT_NE(render_report(std::span(&r, 1), with_macro).find("Macro"), std::string::npos);
}

TEST(Render, EmptyListIsHeaderOnly) {
  const auto text = render_report({});
  EXPECT_NE(text.find("Precision"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  RenderOptions csv;
  csv.format = Format::kCsv;
  EXPECT_EQ(render_report({}, csv), "task,model_id,section,label,precision,recall,f1,support,accuracy\n");
}

TEST(Render, CsvRows) {
  const auto r = detect_report();
  RenderOptions csv;
  csv.format = Format::kCsv;
  const auto text = render_report(std::span(&r, 1), csv);
  EXPECT_NE(text.find("detect,m1,class,Violent,1.00,0.50,0.67,2,\n"), std::string::npos) << text;
  EXPECT_NE(text.find("detect,m1,baseline,random,,,,4,0.50\n"), std::string::npos) << text;
  EXPECT_EQ(parse_format("csv"), Format::kCsv);
  EXPECT_THROW(parse_format("xml"), Error);
}

TEST(Render, CategorizationListsEveryLabel) {
  const Labels preds{"a", "b", "c"};
  const auto r = evaluate(preds, preds, abc(), "cat");
  const auto text = render_report(std::span(&r, 1));
  EXPECT_NE(text.find("\na "), std::string::npos);
  EXPECT_NE(text.find("\nc "), std::string::npos);
}

TEST(ReportJson, RoundTrip) {
  const auto r = detect_report();
  const auto back = report_from_json(to_json(r));
  EXPECT_EQ(back.model_id, r.model_id);
  EXPECT_EQ(back.n, r.n);
  ASSERT_EQ(back.classes.size(), r.classes.size());
  EXPECT_EQ(back.classes[0].f1, r.classes[0].f1);
  EXPECT_EQ(back.majority.label, r.majority.label);
  EXPECT_EQ(render_report(std::span(&back, 1)), render_report(std::span(&r, 1)));
}

TEST(Render, McNemarLine) {
  EXPECT_EQ(render_mcnemar(mcnemar(0, 0), "a", "b"), "McNemar a vs b: b=0 c=0 p=1 (no discordant pairs)\n");
}

}  // namespace
}  // namespace strife::eval
