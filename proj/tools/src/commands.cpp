#include "commands.hpp"

#include <csignal>
#include <map>
#include <memory>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "strife/dataset.hpp"
#include "strife/errors.hpp"
#include "strife/eval.hpp"
#include "strife/fixture.hpp"
#include "strife/ingest.hpp"
#include "strife/jsonl.hpp"
#include "strife/llm.hpp"
#include "strife/registry.hpp"
#include "strife/service.hpp"
#include "strife/store.hpp"
#include "strife/text.hpp"

namespace strife::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Registries load_registries(const std::string& dir) { return dir.empty() ? Registries{} : Registries::load_dir(dir); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create directory " + dir.string() + ": " + ec.message());
}

void require_file(const std::string& path, std::string_view flag) {
  if (path.empty()) fail(ErrorKind::kConfiguration, std::string(flag) + " is required");
  if (!fs::exists(path)) fail(ErrorKind::kNotFound, "input not found: " + path);
}

void write_json(const fs::path& path, const json& j) { text::write_file_atomic(path, j.dump(2) + "\n"); }

std::vector<json> passage_rows(std::span<const Passage> passages) {
  std::vector<json> rows;
  rows.reserve(passages.size());
  for (const auto& p : passages) rows.push_back(jsonl::to_json(p));
  return rows;
}

std::vector<Passage> read_passages(const fs::path& path) {
  return jsonl::read_as<Passage>(path, jsonl::passage_from_json);
}

std::vector<LabeledExample> read_examples(const fs::path& path) {
  return jsonl::read_as<LabeledExample>(path, jsonl::example_from_json);
}

std::vector<json> example_rows(std::span<const LabeledExample> rows, std::string_view split, std::uint64_t seed) {
  std::vector<json> out;
  out.reserve(rows.size());
  for (const auto& e : rows) out.push_back(jsonl::to_json(e, split, seed));
  return out;
}

json counts_json(const std::map<std::string, std::size_t>& counts) { return json(counts); }

std::shared_ptr<llm::ChatClient> make_chat_client(const ChatArgs& args) {
  std::shared_ptr<llm::ChatTransport> transport;
  if (args.stub) {
    transport = std::make_shared<llm::StubChatTransport>();
  } else {
    if (args.base_url.empty() || args.model.empty()) {
      fail(ErrorKind::kConfiguration, "either --stub or both --base-url and --model are required");
    }
    llm::HttpTransportConfig config;
    config.base_url = args.base_url;
    config.api_key_env = args.api_key_env;
    config.timeout = std::chrono::seconds(args.timeout_seconds);
    transport = std::make_shared<llm::HttpChatTransport>(config);
  }
  llm::RetryPolicy retry;
  retry.max_retries = args.max_retries;
  std::shared_ptr<llm::TokenBucket> limiter;
  if (args.rpm > 0.0) limiter = std::make_shared<llm::TokenBucket>(args.rpm);
  return std::make_shared<llm::ChatClient>(transport, retry, limiter);
}

std::string model_name(const ChatArgs& args) { return args.stub ? std::string("stub") : args.model; }

// Gold and prediction columns joined on passage id.
struct Scored {
  Task task = Task::kDetect;
  std::vector<std::string> ids;
  std::vector<std::string> golds;
  std::vector<std::string> preds;
};

std::string row_id(const json& row) {
  for (const char* key : {"passage_id", "source_id", "id"}) {
    if (row.contains(key) && row.at(key).is_string()) return row.at(key).get<std::string>();
  }
  fail(ErrorKind::kParse, "row has no passage_id, source_id or id: " + row.dump());
}

std::optional<std::string> row_string(const json& row, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (row.contains(key) && row.at(key).is_string()) return row.at(key).get<std::string>();
  }
  return std::nullopt;
}

Task row_task(const json& row) {
  const auto name = row_string(row, {"task"});
  return name ? parse_task(*name) : Task::kDetect;
}

Scored scored_from_files(const fs::path& preds_path, const std::string& golds_path) {
  Scored s;
  const auto pred_rows = jsonl::read(preds_path);
  if (pred_rows.empty()) fail(ErrorKind::kValidation, preds_path.string() + " holds no predictions");
  std::map<std::string, std::string> gold_by_id;
  if (!golds_path.empty()) {
    for (const auto& row : jsonl::read(golds_path)) {
      const auto gold = row_string(row, {"gold", "label"});
      if (!gold) fail(ErrorKind::kParse, "gold row without gold or label: " + row.dump());
      gold_by_id[row_id(row)] = *gold;
    }
  }
  s.task = row_task(pred_rows.front());
  for (const auto& row : pred_rows) {
    const auto id = row_id(row);
    if (row_task(row) != s.task) fail(ErrorKind::kValidation, "prediction rows mix tasks (row " + id + ")");
    const auto pred = row_string(row, {"pred", "label"});
    if (!pred) fail(ErrorKind::kValidation, "row " + id + " has no prediction");
    std::optional<std::string> gold;
    if (golds_path.empty()) {
      gold = row_string(row, {"gold"});
    } else if (auto it = gold_by_id.find(id); it != gold_by_id.end()) {
      gold = it->second;
    }
    if (!gold) fail(ErrorKind::kValidation, "no gold label for " + id);
    s.ids.push_back(id);
    s.preds.push_back(*pred);
    s.golds.push_back(*gold);
  }
  return s;
}

Scored scored_from_model(const models::ModelHandle& model, const fs::path& test_path, std::vector<double>& scores) {
  const auto test = read_examples(test_path);
  if (test.empty()) fail(ErrorKind::kValidation, test_path.string() + " holds no examples");
  Scored s;
  s.task = model.task;
  std::vector<Passage> passages;
  for (const auto& e : test) {
    if (e.task != model.task) {
      fail(ErrorKind::kValidation, "example " + e.id + " is " + std::string(to_string(e.task)) + ", model is " +
                                       std::string(to_string(model.task)));
    }
    Passage p;
    p.id = model.task == Task::kDetect ? e.source_id : e.id;
    p.text = e.text;
    passages.push_back(std::move(p));
    s.ids.push_back(passages.back().id);
    s.golds.push_back(e.label);
  }
  for (const auto& p : models::predict(model, passages)) {
    s.preds.push_back(p.label);
    scores.push_back(p.score);
  }
  return s;
}

service::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

RunRecord make_fixture(const FixtureArgs& args) {
  if (args.out.empty()) fail(ErrorKind::kConfiguration, "--out is required");
  fixture::Options options;
  options.seed = args.seed;
  const auto fx = fixture::generate(options);
  fixture::write(fx, args.out);
  RunRecord r;
  r.outputs = {fs::path(args.out) / "corpus", fs::path(args.out) / "events.jsonl"};
  r.details = {{"passages", fx.passages.size()}, {"events", fx.events.size()}};
  std::printf("%s\n", r.details.dump().c_str());
  return r;
}

RunRecord ingest(const IngestArgs& args) {
  if (args.corpus.empty()) fail(ErrorKind::kConfiguration, "--corpus is required");
  require_file(args.events, "--events");
  if (args.out.empty()) fail(ErrorKind::kConfiguration, "--out is required");
  for (const auto& c : args.corpus) {
    if (!fs::exists(c)) fail(ErrorKind::kNotFound, "input not found: " + c);
  }
  const auto registries = load_registries(args.registries);
  const std::vector<fs::path> inputs(args.corpus.begin(), args.corpus.end());
  const auto result = ingest::run(inputs, args.events, registries);

  const fs::path out = args.out;
  ensure_dir(out);
  jsonl::write(out / "passages.jsonl", passage_rows(result.corpus.passages));
  jsonl::write(out / "violent.jsonl", passage_rows(result.violent));
  jsonl::write(out / "nonviolent.jsonl", passage_rows(result.nonviolent));
  std::vector<json> event_rows;
  for (const auto& e : result.events) event_rows.push_back(jsonl::to_json(e));
  jsonl::write(out / "events.jsonl", event_rows);

  json unmatched = json::array();
  for (const auto& u : result.report.unmatched) unmatched.push_back({{"event_id", u.event_id}, {"reason", u.reason}});
  const json alignment{{"passages", result.corpus.passages.size()},
                       {"total_events", result.report.total_events},
                       {"matched", result.report.matched},
                       {"unmatched", unmatched},
                       {"violent_passages", result.violent.size()},
                       {"nonviolent_passages", result.nonviolent.size()},
                       {"annotated_works", result.report.annotated_works},
                       {"warnings", result.corpus.warnings}};
  write_json(out / "alignment.json", alignment);

  RunRecord r;
  r.inputs = inputs;
  r.inputs.emplace_back(args.events);
  r.outputs = {out / "passages.jsonl", out / "violent.jsonl", out / "nonviolent.jsonl", out / "events.jsonl",
               out / "alignment.json"};
  if (!args.db.empty()) {
    auto store = CorpusStore::open(args.db, registries);
    const auto new_passages = store.put_passages(result.corpus.passages);
    const auto new_events = store.put_events(result.events);
    r.outputs.emplace_back(args.db);
    r.details["stored"] = {{"passages", new_passages}, {"events", new_events}};
  }
  r.details["violent"] = result.violent.size();
  r.details["nonviolent"] = result.nonviolent.size();
  r.details["unmatched_events"] = result.report.unmatched.size();
  std::printf("%s\n", json{{"violent", result.violent.size()},
                           {"nonviolent", result.nonviolent.size()},
                           {"matched_events", result.report.matched},
                           {"unmatched_events", result.report.unmatched.size()}}
                          .dump()
                          .c_str());
  return r;
}

RunRecord build_dataset(const BuildDatasetArgs& args) {
  if (args.ingested.empty()) fail(ErrorKind::kConfiguration, "--ingested is required");
  if (args.out.empty()) fail(ErrorKind::kConfiguration, "--out is required");
  const fs::path in = args.ingested;
  for (const char* name : {"violent.jsonl", "nonviolent.jsonl", "events.jsonl"}) {
    if (!fs::exists(in / name)) fail(ErrorKind::kNotFound, "input not found: " + (in / name).string());
  }
  const auto registries = load_registries(args.registries);
  const auto violent = read_passages(in / "violent.jsonl");
  const auto nonviolent = read_passages(in / "nonviolent.jsonl");
  const auto events = jsonl::read_as<CuratedEvent>(in / "events.jsonl", jsonl::event_from_json);

  dataset::DetectionSplitConfig detect_config;
  if (args.test_size) {
    detect_config = dataset::DetectionSplitConfig::for_test_size(*args.test_size, args.seed);
  } else {
    detect_config.test_violent = args.test_violent;
    detect_config.test_nonviolent = args.test_nonviolent;
    detect_config.seed = args.seed;
  }

  const fs::path out = args.out;
  ensure_dir(out);
  RunRecord r;
  r.inputs = {in / "violent.jsonl", in / "nonviolent.jsonl", in / "events.jsonl"};
  json stats = json::object();

  auto emit = [&](const dataset::DatasetSplit& split) {
    dataset::validate_split(split, registries.get(split.task));
    const std::string task(to_string(split.task));
    jsonl::write(out / (task + ".train.jsonl"), example_rows(split.train, "train", args.seed));
    jsonl::write(out / (task + ".test.jsonl"), example_rows(split.test, "test", args.seed));
    r.outputs.push_back(out / (task + ".train.jsonl"));
    r.outputs.push_back(out / (task + ".test.jsonl"));
    const auto s = split.stats();
    stats[task] = {{"train", counts_json(s.train)},
                   {"test", counts_json(s.test)},
                   {"train_total", split.train.size()},
                   {"test_total", split.test.size()}};
  };

  emit(dataset::make_detection_split(violent, nonviolent, detect_config));
  for (Task task : kCategorizationTasks) {
    emit(dataset::make_categorization_split(events, task, registries.get(task), args.train_frac, args.seed));
  }
  stats["seed"] = args.seed;
  stats["train_frac"] = args.train_frac;
  write_json(out / "stats.json", stats);
  r.outputs.push_back(out / "stats.json");
  r.details = stats;
  std::printf("%s\n", json{{"detect", stats["detect"]}}.dump().c_str());
  return r;
}

RunRecord augment(const AugmentArgs& args) {
  require_file(args.train, "--train");
  if (args.out.empty()) fail(ErrorKind::kConfiguration, "--out is required");
  const auto rows = jsonl::read(args.train);
  std::uint64_t seed = dataset::kDefaultSeed;
  if (!rows.empty() && rows.front().contains("seed") && rows.front().at("seed").is_number_unsigned()) {
    seed = rows.front().at("seed").get<std::uint64_t>();
  }
  std::vector<LabeledExample> train;
  train.reserve(rows.size());
  for (const auto& row : rows) train.push_back(jsonl::example_from_json(row));

  dataset::AugmentOptions options;
  options.k = args.k;
  options.parallelism = args.parallelism;
  if (!args.chat.cache_dir.empty()) options.cache = std::make_shared<llm::ResponseCache>(args.chat.cache_dir);

  std::unique_ptr<llm::Paraphraser> paraphraser;
  if (args.chat.stub) {
    paraphraser = std::make_unique<llm::StubParaphraser>();
  } else {
    paraphraser = std::make_unique<llm::ChatParaphraser>(make_chat_client(args.chat), args.chat.model, args.temperature);
  }
  const auto result = dataset::augment(train, *paraphraser, options);
  jsonl::write(args.out, example_rows(result.examples, "train", seed));

  std::map<std::string, std::size_t> counts;
  for (const auto& e : result.examples) counts[e.label]++;
  json failures = json::array();
  for (const auto& f : result.failures) {
    failures.push_back({{"example_id", f.example_id}, {"paraphrase_index", f.paraphrase_index}, {"reason", f.reason}});
  }
  RunRecord r;
  r.inputs = {args.train};
  r.outputs = {args.out};
  r.details = {{"counts", counts},
               {"requests", result.requests},
               {"cache_hits", result.cache_hits},
               {"failures", failures},
               {"paraphraser", model_name(args.chat)}};
  if (!result.failures.empty()) spdlog::warn("{}", result.error_summary());
  std::printf("%s\n", json{{"counts", counts}, {"failures", result.failures.size()}}.dump().c_str());
  return r;
}

RunRecord train(const TrainArgs& args) {
  if (args.task.empty()) fail(ErrorKind::kConfiguration, "--task is required");
  require_file(args.train, "--train");
  if (args.run_dir.empty()) fail(ErrorKind::kConfiguration, "--run-dir is required");
  const auto task = parse_task(args.task);
  const auto examples = read_examples(args.train);
  const auto registries = load_registries(args.registries);
  const auto model = task == Task::kDetect
                         ? models::train_detector(examples, args.config)
                         : models::train_categorizer(task, examples, args.config, registries.get(task));
  const auto dir = models::save_model(model, args.run_dir);
  RunRecord r;
  r.inputs = {args.train};
  r.outputs = {dir};
  r.details = {{"model_id", model.model_id}, {"tag", model.tag}, {"metrics", model.metrics}};
  std::printf("%s\n", json{{"model_id", model.model_id}, {"tag", model.tag}, {"dir", dir.string()}}.dump().c_str());
  return r;
}

RunRecord evaluate(const EvaluateArgs& args) {
  const auto format = eval::parse_format(args.format);
  RunRecord r;
  Scored scored;
  std::vector<double> scores;
  std::string model_id;
  Registries registries = load_registries(args.registries);
  std::optional<LabelRegistry> registry;

  if (!args.model.empty()) {
    if (!args.preds.empty()) fail(ErrorKind::kConfiguration, "--model and --preds are mutually exclusive");
    if (args.run_dir.empty()) fail(ErrorKind::kConfiguration, "--run-dir is required with --model");
    require_file(args.test, "--test");
    const auto model_dir = fs::path(args.run_dir) / args.model;
    if (!fs::exists(model_dir)) fail(ErrorKind::kNotFound, "model not found: " + model_dir.string());
    const auto model = models::load_model(model_dir);
    scored = scored_from_model(model, args.test, scores);
    model_id = model.model_id;
    registry = model.registry;
    r.inputs = {model_dir, args.test};
  } else {
    require_file(args.preds, "--preds (or --model)");
    if (!args.golds.empty()) require_file(args.golds, "--golds");
    scored = scored_from_files(args.preds, args.golds);
    model_id = fs::path(args.preds).stem().string();
    registry = registries.get(scored.task);
    r.inputs = {args.preds};
    if (!args.golds.empty()) r.inputs.emplace_back(args.golds);
  }

  const auto report = eval::evaluate(scored.preds, scored.golds, *registry, model_id);
  eval::RenderOptions render;
  render.format = format;
  render.macro = args.macro;
  std::string rendered = eval::render_report(std::span(&report, 1), render);

  r.details = {{"model_id", model_id},
               {"task", to_string(scored.task)},
               {"n", report.n},
               {"accuracy", report.accuracy},
               {"weighted_f1", report.overall.f1}};
  if (!args.compare.empty()) {
    require_file(args.compare, "--compare");
    std::map<std::string, std::string> other_pred;
    for (const auto& row : jsonl::read(args.compare)) {
      const auto pred = row_string(row, {"pred", "label"});
      if (!pred) fail(ErrorKind::kValidation, "--compare row without a prediction: " + row.dump());
      other_pred[row_id(row)] = *pred;
    }
    std::vector<std::string> b_preds;
    for (const auto& id : scored.ids) {
      auto it = other_pred.find(id);
      if (it == other_pred.end()) fail(ErrorKind::kValidation, "--compare has no prediction for " + id);
      b_preds.push_back(it->second);
    }
    const auto mc = eval::mcnemar(scored.preds, b_preds, scored.golds);
    rendered += "\n" + eval::render_mcnemar(mc, model_id, fs::path(args.compare).stem().string());
    r.inputs.emplace_back(args.compare);
    r.details["mcnemar"] = {{"b", mc.b}, {"c", mc.c}, {"p_value", mc.p_value}, {"degenerate", mc.degenerate}};
  }
  std::fwrite(rendered.data(), 1, rendered.size(), stdout);

  if (!args.out.empty()) {
    auto j = eval::to_json(report);
    if (r.details.contains("mcnemar")) j["mcnemar"] = r.details["mcnemar"];
    write_json(args.out, j);
    r.outputs.emplace_back(args.out);
  }
  if (!args.write_preds.empty()) {
    std::vector<json> rows;
    for (std::size_t i = 0; i < scored.ids.size(); ++i) {
      json row{{"passage_id", scored.ids[i]},
               {"task", to_string(scored.task)},
               {"gold", scored.golds[i]},
               {"pred", scored.preds[i]}};
      if (i < scores.size()) row["score"] = scores[i];
      rows.push_back(std::move(row));
    }
    jsonl::write(args.write_preds, rows);
    r.outputs.emplace_back(args.write_preds);
  }
  return r;
}

RunRecord report(const ReportArgs& args) {
  if (args.inputs.empty()) fail(ErrorKind::kConfiguration, "--input is required");
  std::vector<eval::EvalReport> reports;
  RunRecord r;
  for (const auto& path : args.inputs) {
    require_file(path, "--input");
    json j;
    try {
      j = json::parse(text::read_file(path));
    } catch (const json::exception& e) {
      fail(ErrorKind::kParse, path + ": " + e.what());
    }
    if (j.is_array()) {
      for (const auto& item : j) reports.push_back(eval::report_from_json(item));
    } else {
      reports.push_back(eval::report_from_json(j));
    }
    r.inputs.emplace_back(path);
  }
  eval::RenderOptions render;
  render.format = eval::parse_format(args.format);
  render.macro = args.macro;
  const auto rendered = eval::render_report(reports, render);
  std::fwrite(rendered.data(), 1, rendered.size(), stdout);
  r.details = {{"reports", reports.size()}};
  return r;
}

RunRecord annotate_zeroshot(const ZeroShotArgs& args) {
  require_file(args.input, "--input");
  if (args.out.empty()) fail(ErrorKind::kConfiguration, "--out is required");
  std::shared_ptr<llm::ResponseCache> cache;
  if (!args.chat.cache_dir.empty()) cache = std::make_shared<llm::ResponseCache>(args.chat.cache_dir);
  llm::ZeroShotAnnotator annotator(make_chat_client(args.chat), model_name(args.chat), 0.0, cache);

  std::vector<json> out;
  std::size_t unparseable = 0;
  std::map<std::string, std::size_t> counts;
  for (const auto& row : jsonl::read(args.input)) {
    const auto text = row_string(row, {"text"});
    if (!text) fail(ErrorKind::kParse, "input row without text: " + row.dump());
    const auto result = annotator.classify(*text);
    const auto label = llm::resolve_label(result);
    unparseable += !result.parse_ok;
    counts[label]++;
    json o{{"passage_id", row_id(row)},
           {"task", "detect"},
           {"pred", label},
           {"parse_ok", result.parse_ok},
           {"raw_response", result.raw_response}};
    if (row_task(row) == Task::kDetect) {
      if (auto gold = row_string(row, {"gold", "label"})) o["gold"] = *gold;
    }
    out.push_back(std::move(o));
  }
  jsonl::write(args.out, out);
  RunRecord r;
  r.inputs = {args.input};
  r.outputs = {args.out};
  r.details = {{"counts", counts}, {"unparseable", unparseable}, {"model", model_name(args.chat)}};
  std::printf("%s\n", r.details.dump().c_str());
  return r;
}

RunRecord serve(const ServeArgs& args, const std::function<void(const RunRecord&)>& on_ready) {
  if (args.db.empty()) fail(ErrorKind::kConfiguration, "--db is required");
  if (args.run_dir.empty()) fail(ErrorKind::kConfiguration, "--run-dir is required");
  auto store = CorpusStore::open(args.db, load_registries(args.registries));
  auto repo = std::make_shared<models::ModelRepository>(args.run_dir);
  service::Service svc(store, repo, service::options_from_env());

  RunRecord r;
  r.outputs = {args.db};
  r.details = {{"host", args.host}, {"port", args.port}, {"passages", store.passage_count()}};
  on_ready(r);

  g_service = &svc;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  svc.run(args.host, args.port);
  g_service = nullptr;
  svc.wait_idle(std::chrono::seconds(5));
  return r;
}

}  // namespace strife::cli
