// strife: batch front end for the violence detection pipeline.

#include <chrono>
#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "manifest.hpp"
#include "strife/errors.hpp"
#include "strife/service.hpp"
#include "strife/text.hpp"

namespace {

using namespace strife;
using nlohmann::json;

constexpr int kExitUsage = 64;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound:
    case ErrorKind::kIo:
      return 2;
    case ErrorKind::kValidation:
    case ErrorKind::kParse:
    case ErrorKind::kConflict:
      return 3;
    case ErrorKind::kConfiguration:
      return 4;
    case ErrorKind::kClient:
    case ErrorKind::kFormat:
      return 5;
  }
  return 1;
}

int report_error(std::string_view kind, const std::string& message, int code) {
  const json line{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::fprintf(stderr, "%s\n", line.dump(-1, ' ', false, json::error_handler_t::replace).c_str());
  return code;
}

// Effective option values of one subcommand, whether given on the command
// line, read from the config file or left at their defaults.
json config_snapshot(const CLI::App& sub) {
  json config = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const auto name = opt->get_single_name();
    if (name == "help") continue;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      config[name] = opt->get_expected_max() > 1 ? json(results) : json(results.back());
    } else {
      config[name] = opt->get_default_str();
    }
  }
  return config;
}

void add_chat_options(CLI::App* sub, cli::ChatArgs& chat) {
  sub->add_flag("--stub", chat.stub, "Use the deterministic offline stub instead of a chat endpoint");
  sub->add_option("--base-url", chat.base_url, "Chat-completions base URL, e.g. https://api.example.com/v1");
  sub->add_option("--model", chat.model, "Remote model name");
  sub->add_option("--api-key-env", chat.api_key_env, "Environment variable holding the API key");
  sub->add_option("--rpm", chat.rpm, "Request rate limit per minute (0 = unlimited)");
  sub->add_option("--max-retries", chat.max_retries, "Retries per request on transient failures");
  sub->add_option("--timeout", chat.timeout_seconds, "Per-request timeout in seconds");
  sub->add_option("--cache-dir", chat.cache_dir, "Response cache directory");
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("strife");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");

  CLI::App app{"Violence detection and categorization pipeline for classical texts"};
  app.set_version_flag("--version", std::string(PROJECT_VERSION));
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML config file; [subcommand] sections apply to that command, flags win");
  std::string manifest_dir = ".strife/manifests";
  bool verbose = false;
  bool quiet = false;
  app.add_option("--manifest-dir", manifest_dir, "Directory for run manifests")->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  cli::FixtureArgs fixture_args;
  auto* fixture = app.add_subcommand("make-fixture", "Write the synthetic evaluation corpus and events");
  fixture->add_option("--out", fixture_args.out, "Output directory")->required();
  fixture->add_option("--seed", fixture_args.seed, "Generator seed");

  cli::IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Parse a corpus, align curated events and extract both classes");
  ingest->add_option("--corpus", ingest_args.corpus, "Corpus files or directories (*.txt, *.jsonl)")->required();
  ingest->add_option("--events", ingest_args.events, "Curated events JSONL")->required();
  ingest->add_option("--registries", ingest_args.registries, "Directory of <task>.txt label registries");
  ingest->add_option("--db", ingest_args.db, "Also store passages and events in this SQLite database");
  ingest->add_option("--out", ingest_args.out, "Output directory")->required();

  cli::BuildDatasetArgs build_args;
  auto* build = app.add_subcommand("build-dataset", "Build detection and categorization train/test splits");
  build->add_option("--ingested", build_args.ingested, "Output directory of `ingest`")->required();
  build->add_option("--out", build_args.out, "Output directory")->required();
  build->add_option("--registries", build_args.registries, "Directory of <task>.txt label registries");
  build->add_option("--seed", build_args.seed, "Split seed");
  auto* test_size = build->add_option("--test-size", build_args.test_size,
                                      "Detection test size at the default class mix");
  build->add_option("--test-violent", build_args.test_violent, "Violent passages in the detection test set")
      ->excludes(test_size);
  build->add_option("--test-nonviolent", build_args.test_nonviolent, "Non-violent passages in the detection test set")
      ->excludes(test_size);
  build->add_option("--train-frac", build_args.train_frac, "Categorization train fraction");

  cli::AugmentArgs augment_args;
  auto* augment = app.add_subcommand("augment", "Add k paraphrases per training example");
  augment->add_option("--train", augment_args.train, "Training JSONL")->required();
  augment->add_option("--out", augment_args.out, "Augmented JSONL")->required();
  augment->add_option("--k", augment_args.k, "Paraphrases per example");
  augment->add_option("--parallelism", augment_args.parallelism, "Concurrent paraphrase requests");
  augment->add_option("--temperature", augment_args.temperature, "Sampling temperature");
  add_chat_options(augment, augment_args.chat);

  cli::TrainArgs train_args;
  auto& tc = train_args.config;
  auto* train = app.add_subcommand("train", "Fine-tune a detector or one categorization model");
  train->add_option("--task", train_args.task, "detect, level, context, motive or consequence")->required();
  train->add_option("--train", train_args.train, "Training JSONL")->required();
  train->add_option("--run-dir", train_args.run_dir, "Directory receiving <model_id>/")->required();
  train->add_option("--registries", train_args.registries, "Directory of <task>.txt label registries");
  train->add_option("--backbone", tc.backbone, "Encoder backbone");
  train->add_option("--max-seq-len", tc.max_sequence_length, "Tokens kept per text");
  train->add_option("--epochs", tc.epochs, "Training epochs");
  train->add_option("--lr", tc.learning_rate, "Initial learning rate");
  train->add_option("--batch-size", tc.batch_size, "Minibatch size");
  train->add_option("--seed", tc.seed, "Initialisation and shuffling seed");
  train->add_option("--validation-fraction", tc.validation_fraction, "Categorization validation share");
  train->add_option("--buckets", tc.buckets, "Hashed feature buckets");
  train->add_option("--dim", tc.dim, "Embedding width");
  train->add_flag("--class-weighting", tc.class_weighting, "Weight the loss by inverse class frequency");
  train->add_flag("--as-is", tc.as_is, "Skip fine-tuning (untrained baseline)");
  train->add_option("--threshold", tc.threshold, "Detection threshold on P(violent)");

  cli::EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Score a model or a predictions file against gold labels");
  evaluate->add_option("--model", eval_args.model, "Model id under --run-dir");
  evaluate->add_option("--run-dir", eval_args.run_dir, "Run directory holding the model");
  evaluate->add_option("--test", eval_args.test, "Test JSONL (with --model)");
  evaluate->add_option("--preds", eval_args.preds, "Predictions JSONL {passage_id, task, gold, pred}");
  evaluate->add_option("--golds", eval_args.golds, "Gold labels JSONL joined on passage id");
  evaluate->add_option("--compare", eval_args.compare, "Second predictions JSONL for a McNemar test");
  evaluate->add_option("--registries", eval_args.registries, "Directory of <task>.txt label registries");
  evaluate->add_option("--format", eval_args.format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  evaluate->add_option("--out", eval_args.out, "Write the report as JSON");
  evaluate->add_option("--write-preds", eval_args.write_preds, "Write per-item predictions JSONL");
  evaluate->add_flag("--macro", eval_args.macro, "Add macro-averaged rows");

  cli::ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Render saved evaluation reports side by side");
  report->add_option("--input", report_args.inputs, "Report JSON files")->required();
  report->add_option("--format", report_args.format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  report->add_flag("--macro", report_args.macro, "Add macro-averaged rows");

  cli::ZeroShotArgs zs_args;
  auto* zeroshot = app.add_subcommand("annotate-zeroshot", "Label passages violent/nonviolent with a chat model");
  zeroshot->add_option("--input", zs_args.input, "Passages or dataset JSONL")->required();
  zeroshot->add_option("--out", zs_args.out, "Predictions JSONL")->required();
  add_chat_options(zeroshot, zs_args.chat);

  cli::ServeArgs serve_args;
  serve_args.port = -1;
  auto* serve = app.add_subcommand("serve", "Run the HTTP annotation and review service (token: STRIFE_TOKEN)");
  serve->add_option("--db", serve_args.db, "SQLite database")->required();
  serve->add_option("--run-dir", serve_args.run_dir, "Run directory holding trained models")->required();
  serve->add_option("--registries", serve_args.registries, "Directory of <task>.txt label registries");
  serve->add_option("--host", serve_args.host, "Bind address");
  serve->add_option("--port", serve_args.port, "Port (default: STRIFE_PORT or 8080)");

  for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) {
    for (auto* opt : sub->get_options()) {
      if (opt->get_single_name() != "help") opt->capture_default_str();
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), kExitUsage);
  }

  if (verbose) spdlog::set_level(spdlog::level::debug);
  if (quiet) spdlog::set_level(spdlog::level::warn);

  CLI::App* sub = app.get_subcommands().front();
  cli::RunManifest manifest;
  manifest.command = sub->get_name();
  manifest.config = config_snapshot(*sub);
  manifest.started_at = text::utc_timestamp();
  const auto start = std::chrono::steady_clock::now();

  auto finish = [&](const cli::RunRecord& record) {
    for (const auto& in : record.inputs) manifest.inputs[in.string()] = cli::hash_input(in);
    for (const auto& out : record.outputs) manifest.outputs.push_back(out.string());
    manifest.details = record.details;
    manifest.finished_at = text::utc_timestamp();
    manifest.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto path = cli::write_manifest(manifest, manifest_dir);
    if (manifest.previous) {
      spdlog::info("manifest {} (identical rerun of {})", path.string(), *manifest.previous);
    } else {
      spdlog::info("manifest {}", path.string());
    }
  };

  try {
    const auto& name = manifest.command;
    if (name == "make-fixture") {
      finish(cli::make_fixture(fixture_args));
    } else if (name == "ingest") {
      finish(cli::ingest(ingest_args));
    } else if (name == "build-dataset") {
      finish(cli::build_dataset(build_args));
    } else if (name == "augment") {
      finish(cli::augment(augment_args));
    } else if (name == "train") {
      finish(cli::train(train_args));
    } else if (name == "evaluate") {
      finish(cli::evaluate(eval_args));
    } else if (name == "report") {
      finish(cli::report(report_args));
    } else if (name == "annotate-zeroshot") {
      finish(cli::annotate_zeroshot(zs_args));
    } else if (name == "serve") {
      if (serve_args.port < 0) serve_args.port = service::port_from_env(8080);
      manifest.config["port"] = std::to_string(serve_args.port);
      cli::serve(serve_args, finish);
    }
  } catch (const Error& e) {
    return report_error(to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const json::exception& e) {
    return report_error("parse", e.what(), exit_code(ErrorKind::kParse));
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error("io", e.what(), exit_code(ErrorKind::kIo));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
