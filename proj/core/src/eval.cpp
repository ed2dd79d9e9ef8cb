#include "strife/eval.hpp"

#include <spdlog/fmt/fmt.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "strife/errors.hpp"

namespace strife::eval {
namespace {

double ratio(std::size_t num, std::size_t den) noexcept {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string display_label(Task task, const std::string& label) {
  if (task == Task::kDetect) {
    if (label == kViolent) return "Violent";
    if (label == kNonViolent) return "Non-Violent";
  }
  return label;
}

std::string fixed2(double v) { return fmt::format("{:.2f}", round_half_up(v, 2)); }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

const ClassCounts& ConfusionCounts::of(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return per_class[i];
  }
  fail(ErrorKind::kValidation, "no counts for label '" + std::string(label) + "'");
}

ConfusionCounts confusion(std::span<const std::string> preds, std::span<const std::string> golds,
                          const LabelRegistry& registry) {
  if (preds.size() != golds.size()) {
    fail(ErrorKind::kValidation, "prediction and gold lists differ in length (" + std::to_string(preds.size()) +
                                     " vs " + std::to_string(golds.size()) + ")");
  }
  if (golds.empty()) fail(ErrorKind::kValidation, "cannot evaluate an empty prediction list");
  ConfusionCounts out;
  out.task = registry.task();
  out.labels = registry.labels();
  out.per_class.assign(registry.size(), {});
  out.n = golds.size();
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const auto g = registry.require(golds[i]);
    const auto p = registry.require(preds[i]);
    if (g == p) {
      ++out.per_class[g].tp;
      ++out.correct;
    } else {
      ++out.per_class[g].fn;
      ++out.per_class[p].fp;
    }
  }
  for (auto& c : out.per_class) c.tn = out.n - c.tp - c.fp - c.fn;
  return out;
}

double precision(const ClassCounts& c) noexcept { return ratio(c.tp, c.tp + c.fp); }
double recall(const ClassCounts& c) noexcept { return ratio(c.tp, c.tp + c.fn); }
double f1(const ClassCounts& c) noexcept { return f1(precision(c), recall(c)); }
double f1(double p, double r) noexcept { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

Averages weighted_overall(std::span<const ClassMetrics> classes) noexcept {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.support;
  Averages out;
  if (n == 0) return out;
  for (const auto& c : classes) {
    const double w = ratio(c.support, n);
    out.precision += w * c.precision;
    out.recall += w * c.recall;
    out.f1 += w * c.f1;
  }
  return out;
}

Averages macro_overall(std::span<const ClassMetrics> classes) noexcept {
  Averages out;
  std::size_t k = 0;
  for (const auto& c : classes) {
    if (c.support == 0) continue;
    out.precision += c.precision;
    out.recall += c.recall;
    out.f1 += c.f1;
    ++k;
  }
  if (k > 0) {
    out.precision /= static_cast<double>(k);
    out.recall /= static_cast<double>(k);
    out.f1 /= static_cast<double>(k);
  }
  return out;
}

Baseline majority_baseline(std::span<const std::string> golds, const LabelRegistry& registry) {
  if (golds.empty()) fail(ErrorKind::kValidation, "majority baseline needs at least one gold label");
  std::vector<std::size_t> counts(registry.size(), 0);
  for (const auto& g : golds) ++counts[registry.require(g)];
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  return Baseline{registry.label(best), ratio(counts[best], golds.size())};
}

double random_baseline(std::span<const std::string> golds) {
  if (golds.empty()) fail(ErrorKind::kValidation, "random baseline needs at least one gold label");
  std::map<std::string_view, std::size_t> counts;
  for (const auto& g : golds) ++counts[g];
  double sum = 0.0;
  for (const auto& [label, n] : counts) {
    const double p = ratio(n, golds.size());
    sum += p * p;
  }
  return sum;
}

EvalReport evaluate(std::span<const std::string> preds, std::span<const std::string> golds,
                    const LabelRegistry& registry, std::string model_id) {
  const auto counts = confusion(preds, golds, registry);
  EvalReport report;
  report.task = registry.task();
  report.model_id = std::move(model_id);
  report.n = counts.n;
  for (std::size_t i = 0; i < counts.labels.size(); ++i) {
    const auto& c = counts.per_class[i];
    report.classes.push_back({counts.labels[i], precision(c), recall(c), f1(c), c.support()});
  }
  report.overall = weighted_overall(report.classes);
  report.macro = macro_overall(report.classes);
  report.accuracy = ratio(counts.correct, counts.n);
  report.majority = majority_baseline(golds, registry);
  report.random = random_baseline(golds);
  return report;
}

McNemarResult mcnemar(std::size_t b, std::size_t c) {
  McNemarResult out{b, c, 1.0, false};
  const std::size_t n = b + c;
  if (n == 0) {
    out.degenerate = true;
    return out;
  }
  // log C(n, i) - n log 2, summed with log-sum-exp.
  const auto k = std::min(b, c);
  const long double ln2 = std::log(2.0L);
  const long double lgn = std::lgamma(static_cast<long double>(n) + 1.0L);
  std::vector<long double> terms;
  terms.reserve(k + 1);
  for (std::size_t i = 0; i <= k; ++i) {
    terms.push_back(lgn - std::lgamma(static_cast<long double>(i) + 1.0L) -
                    std::lgamma(static_cast<long double>(n - i) + 1.0L) - static_cast<long double>(n) * ln2);
  }
  const long double peak = *std::max_element(terms.begin(), terms.end());
  long double acc = 0.0L;
  for (auto t : terms) acc += std::exp(t - peak);
  const long double tail = std::exp(peak + std::log(acc));
  out.p_value = static_cast<double>(std::min(1.0L, 2.0L * tail));
  return out;
}

McNemarResult mcnemar(std::span<const std::string> preds_a, std::span<const std::string> preds_b,
                      std::span<const std::string> golds) {
  if (preds_a.size() != golds.size() || preds_b.size() != golds.size()) {
    fail(ErrorKind::kValidation, "McNemar needs prediction lists of the same length as the golds");
  }
  std::size_t b = 0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const bool a_ok = preds_a[i] == golds[i];
    const bool b_ok = preds_b[i] == golds[i];
    if (a_ok && !b_ok) ++b;
    if (!a_ok && b_ok) ++c;
  }
  return mcnemar(b, c);
}

nlohmann::json to_json(const EvalReport& r) {
  using nlohmann::json;
  json classes = json::array();
  for (const auto& c : r.classes) {
    classes.push_back(json{{"label", c.label},
                           {"precision", c.precision},
                           {"recall", c.recall},
                           {"f1", c.f1},
                           {"support", c.support}});
  }
  auto averages = [](const Averages& a) {
    return json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
  };
  return json{{"task", to_string(r.task)},
              {"model_id", r.model_id},
              {"n", r.n},
              {"accuracy", r.accuracy},
              {"classes", classes},
              {"overall", averages(r.overall)},
              {"macro", averages(r.macro)},
              {"baselines",
               json{{"majority", json{{"label", r.majority.label}, {"accuracy", r.majority.accuracy}}},
                    {"random", r.random}}}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.task = parse_task(j.at("task").get<std::string>());
    r.model_id = j.value("model_id", "");
    r.n = j.at("n").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    for (const auto& c : j.at("classes")) {
      r.classes.push_back({c.at("label").get<std::string>(), c.at("precision").get<double>(),
                           c.at("recall").get<double>(), c.at("f1").get<double>(), c.at("support").get<std::size_t>()});
    }
    auto averages = [](const nlohmann::json& a) {
      return Averages{a.at("precision").get<double>(), a.at("recall").get<double>(), a.at("f1").get<double>()};
    };
    r.overall = averages(j.at("overall"));
    if (j.contains("macro")) r.macro = averages(j.at("macro"));
    const auto& b = j.at("baselines");
    r.majority = {b.at("majority").at("label").get<std::string>(), b.at("majority").at("accuracy").get<double>()};
    r.random = b.at("random").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

Format parse_format(std::string_view name) {
  if (name == "text") return Format::kText;
  if (name == "csv") return Format::kCsv;
  fail(ErrorKind::kValidation, "unknown report format '" + std::string(name) + "' (expected text or csv)");
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The epsilon keeps values such as 0.925 (stored as 0.92499999...) rounding up.
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

std::string render_report(std::span<const EvalReport> reports, const RenderOptions& options) {
  std::string out;
  if (options.format == Format::kCsv) {
    out += "task,model_id,section,label,precision,recall,f1,support,accuracy\n";
    for (const auto& r : reports) {
      const auto task = std::string(to_string(r.task));
      const auto model = csv_field(r.model_id);
      auto row = [&](std::string_view section, std::string_view label, const std::string& p, const std::string& rc,
                     const std::string& f, const std::string& support, const std::string& acc) {
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", task, model, section, csv_field(label), p, rc, f, support,
                           acc);
      };
      for (const auto& c : r.classes) {
        row("class", display_label(r.task, c.label), fixed2(c.precision), fixed2(c.recall), fixed2(c.f1),
            std::to_string(c.support), "");
      }
      row("overall", "weighted", fixed2(r.overall.precision), fixed2(r.overall.recall), fixed2(r.overall.f1),
          std::to_string(r.n), fixed2(r.accuracy));
      if (options.macro) {
        row("overall", "macro", fixed2(r.macro.precision), fixed2(r.macro.recall), fixed2(r.macro.f1),
            std::to_string(r.n), "");
      }
      row("baseline", "majority:" + display_label(r.task, r.majority.label), "", "", "", std::to_string(r.n),
          fixed2(r.majority.accuracy));
      row("baseline", "random", "", "", "", std::to_string(r.n), fixed2(r.random));
    }
    return out;
  }

  std::size_t width = 12;
  for (const auto& r : reports) {
    for (const auto& c : r.classes) width = std::max(width, display_label(r.task, c.label).size() + 2);
  }
  const auto header = fmt::format("{:<{}}{:>10}{:>8}{:>8}{:>9}\n", "", width, "Precision", "Recall", "F1", "Support");
  if (reports.empty()) return header;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (i > 0) out += "\n";
    out += fmt::format("Task: {}", to_string(r.task));
    if (!r.model_id.empty()) out += fmt::format("   Model: {}", r.model_id);
    out += fmt::format("   N: {}\n", r.n);
    out += header;
    for (const auto& c : r.classes) {
      out += fmt::format("{:<{}}{:>10}{:>8}{:>8}{:>9}\n", display_label(r.task, c.label), width, fixed2(c.precision),
                         fixed2(c.recall), fixed2(c.f1), c.support);
    }
    out += fmt::format("{:<{}}{:>10}{:>8}{:>8}{:>9}\n", "Overall", width, fixed2(r.overall.precision),
                       fixed2(r.overall.recall), fixed2(r.overall.f1), r.n);
    if (options.macro) {
      out += fmt::format("{:<{}}{:>10}{:>8}{:>8}{:>9}\n", "Macro", width, fixed2(r.macro.precision),
                         fixed2(r.macro.recall), fixed2(r.macro.f1), r.n);
    }
    out += fmt::format("Accuracy {}\n", fixed2(r.accuracy));
    out += "Baselines (accuracy)\n";
    out += fmt::format("  Majority (all {}) {}\n", display_label(r.task, r.majority.label),
                       fixed2(r.majority.accuracy));
    out += fmt::format("  Random {}\n", fixed2(r.random));
  }
  out += "\nOverall rows are support-weighted averages of the per-class metrics.\n";
  return out;
}

std::string render_mcnemar(const McNemarResult& result, std::string_view model_a, std::string_view model_b) {
  std::string out = fmt::format("McNemar {} vs {}: b={} c={} p={:.4g}", model_a, model_b, result.b, result.c,
                                result.p_value);
  if (result.degenerate) out += " (no discordant pairs)";
  return out + "\n";
}

}  // namespace strife::eval
