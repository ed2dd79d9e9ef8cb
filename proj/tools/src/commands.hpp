#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strife/models.hpp"

namespace strife::cli {

/// What a command read and wrote, for its manifest.
struct RunRecord {
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  nlohmann::json details = nlohmann::json::object();
};

struct FixtureArgs {
  std::string out;
  std::uint64_t seed = 2024;
};

struct IngestArgs {
  std::vector<std::string> corpus;
  std::string events;
  std::string registries;
  std::string db;
  std::string out;
};

struct BuildDatasetArgs {
  std::string ingested;
  std::string out;
  std::string registries;
  std::uint64_t seed = 13;
  std::optional<std::size_t> test_size;
  std::size_t test_violent = 129;
  std::size_t test_nonviolent = 371;
  double train_frac = 0.8;
};

/// Chat-completion endpoint settings shared by augment and annotate-zeroshot.
struct ChatArgs {
  bool stub = false;
  std::string base_url;
  std::string model;
  std::string api_key_env = "STRIFE_API_KEY";
  double rpm = 0.0;
  int max_retries = 3;
  int timeout_seconds = 60;
  std::string cache_dir;
};

struct AugmentArgs {
  std::string train;
  std::string out;
  int k = 3;
  int parallelism = 1;
  double temperature = 0.7;
  ChatArgs chat;
};

struct TrainArgs {
  std::string task;
  std::string train;
  std::string run_dir;
  std::string registries;
  models::TrainConfig config;
};

struct EvaluateArgs {
  std::string model;
  std::string run_dir;
  std::string test;
  std::string preds;
  std::string golds;
  std::string compare;
  std::string registries;
  std::string format = "text";
  std::string out;
  std::string write_preds;
  bool macro = false;
};

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string format = "text";
  bool macro = false;
};

struct ZeroShotArgs {
  std::string input;
  std::string out;
  ChatArgs chat;
};

struct ServeArgs {
  std::string db;
  std::string run_dir;
  std::string registries;
  std::string host = "127.0.0.1";
  int port = 8080;
};

RunRecord make_fixture(const FixtureArgs& args);
RunRecord ingest(const IngestArgs& args);
RunRecord build_dataset(const BuildDatasetArgs& args);
RunRecord augment(const AugmentArgs& args);
RunRecord train(const TrainArgs& args);
RunRecord evaluate(const EvaluateArgs& args);
RunRecord report(const ReportArgs& args);
RunRecord annotate_zeroshot(const ZeroShotArgs& args);
/// `on_ready` runs once the store and models are open, before serving starts.
RunRecord serve(const ServeArgs& args, const std::function<void(const RunRecord&)>& on_ready);

}  // namespace strife::cli
