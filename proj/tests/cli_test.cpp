#include <gtest/gtest.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "strife/text.hpp"
#include "test_support.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs the strife binary with `args` (already shell-quoted where needed).
RunResult run(const fs::path& work, const std::string& args) {
  const auto out = work / "stdout.txt";
  const auto err = work / "stderr.txt";
  const std::string cmd = std::string("\"") + STRIFE_CLI_PATH + "\" --manifest-dir \"" + (work / "manifests").string() +
                          "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = strife::text::read_file(out);
  r.err = strife::text::read_file(err);
  return r;
}

json last_json_line(const std::string& text) {
  const auto lines = strife::text::split(strife::text::trim(text), '\n');
  return json::parse(lines.back());
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Fixture, ingest and build-dataset once for the whole suite.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir = new strife::testing::TempDir();
    const auto& w = dir->path();
    ASSERT_EQ(run(w, "make-fixture --out " + q(w / "fixture")).exit_code, 0);
    ASSERT_EQ(run(w, "ingest --corpus " + q(w / "fixture" / "corpus") + " --events " +
                         q(w / "fixture" / "events.jsonl") + " --out " + q(w / "ingested"))
                  .exit_code,
              0);
    ASSERT_EQ(run(w, "build-dataset --ingested " + q(w / "ingested") + " --out " + q(w / "data")).exit_code, 0);
  }
  static void TearDownTestSuite() {
    delete dir;
    dir = nullptr;
  }
  static const fs::path& work() { return dir->path(); }

  static strife::testing::TempDir* dir;
};

strife::testing::TempDir* CliTest::dir = nullptr;

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

std::vector<json> manifests(const fs::path& dir, const std::string& command) {
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().rfind(command + "-", 0) == 0) paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<json> out;
  for (const auto& p : paths) out.push_back(json::parse(strife::text::read_file(p)));
  return out;
}

TEST_F(CliTest, HelpExitsZero) {
  const auto r = run(work(), "--help");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("build-dataset"), std::string::npos);
}

TEST_F(CliTest, IngestWritesBothClasses) {
  EXPECT_EQ(line_count(work() / "ingested" / "violent.jsonl"), 461u);
  EXPECT_EQ(line_count(work() / "ingested" / "nonviolent.jsonl"), 2103u);
  EXPECT_EQ(line_count(work() / "data" / "detect.test.jsonl"), 500u);
  for (const char* task : {"detect", "level", "context", "motive", "consequence"}) {
    EXPECT_TRUE(fs::exists(work() / "data" / (std::string(task) + ".train.jsonl"))) << task;
  }
}

TEST_F(CliTest, UsageErrorsExit64) {
  const auto r = run(work(), "train --no-such-flag");
  EXPECT_EQ(r.exit_code, 64);
  EXPECT_EQ(last_json_line(r.err)["error"], "usage");
  EXPECT_EQ(run(work(), "frobnicate").exit_code, 64);
}

TEST_F(CliTest, MissingInputExits2WithJsonError) {
  const auto r = run(work(), "ingest --corpus " + q(work() / "absent") + " --events " + q(work() / "absent.jsonl") +
                                 " --out " + q(work() / "never"));
  EXPECT_EQ(r.exit_code, 2);
  const auto err = last_json_line(r.err);
  EXPECT_EQ(err["error"], "not_found");
  EXPECT_EQ(err["exit_code"], 2);
  EXPECT_FALSE(err["message"].get<std::string>().empty());
}

TEST_F(CliTest, MalformedCorpusExits3) {
  strife::testing::TempDir local;
  strife::text::write_file_atomic(local / "bad.txt", "@@ Alexander one.two\ntext\n");
  strife::text::write_file_atomic(local / "events.jsonl", "");
  const auto r = run(local.path(), "ingest --corpus " + q(local / "bad.txt") + " --events " +
                                       q(local / "events.jsonl") + " --out " + q(local / "out"));
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_EQ(last_json_line(r.err)["error"], "parse");
}

TEST_F(CliTest, UnsupportedBackboneExits4) {
  const auto r = run(work(), "train --task detect --train " + q(work() / "data" / "detect.train.jsonl") +
                                 " --run-dir " + q(work() / "runs-large") + " --backbone bert-large");
  EXPECT_EQ(r.exit_code, 4);
  EXPECT_EQ(last_json_line(r.err)["error"], "configuration");
}

TEST_F(CliTest, BuildDatasetIsDeterministicAndRerunsLinkManifests) {
  strife::testing::TempDir local;
  const auto args = "build-dataset --ingested " + q(work() / "ingested") + " --out " + q(local / "again");
  ASSERT_EQ(run(local.path(), args).exit_code, 0);
  for (const auto& entry : fs::directory_iterator(work() / "data")) {
    const auto name = entry.path().filename();
    EXPECT_EQ(strife::text::sha256_hex(strife::text::read_file(entry.path())),
              strife::text::sha256_hex(strife::text::read_file(local / "again" / name.string())))
        << name;
  }
  ASSERT_EQ(run(local.path(), args).exit_code, 0);
  const auto runs = manifests(local / "manifests", "build-dataset");
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_TRUE(runs[0]["previous"].is_null());
  EXPECT_FALSE(runs[1]["previous"].is_null());
  EXPECT_EQ(runs[0]["inputs"], runs[1]["inputs"]);
  EXPECT_EQ(runs[1]["config"]["seed"], runs[0]["config"]["seed"]);
}

TEST_F(CliTest, FlagsOverrideTheConfigFile) {
  strife::testing::TempDir local;
  strife::text::write_file_atomic(local / "strife.ini", "[train]\ntask = level\nepochs = 1\ndim = 8\n");
  const auto r = run(local.path(), "--config " + q(local / "strife.ini") + " train --train " +
                                       q(work() / "data" / "level.train.jsonl") + " --run-dir " +
                                       q(local / "runs") + " --epochs 2");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto runs = manifests(local / "manifests", "train");
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0]["config"]["task"], "level");
  EXPECT_EQ(runs[0]["config"]["epochs"], "2");
  EXPECT_EQ(runs[0]["config"]["dim"], "8");
  EXPECT_EQ(last_json_line(r.out)["tag"], "fine-tuned");
}

TEST_F(CliTest, FullPipelineWithinFiveMinutes) {
  strife::testing::TempDir local;
  const auto& w = local.path();
  const auto started = std::chrono::steady_clock::now();
  const auto data = work() / "data";
  ASSERT_EQ(run(w, "augment --stub --k 3 --train " + q(data / "detect.train.jsonl") + " --out " +
                       q(w / "detect.aug.jsonl"))
                .exit_code,
            0);
  EXPECT_EQ(line_count(w / "detect.aug.jsonl"), 4u * line_count(data / "detect.train.jsonl"));

  const auto trained = run(w, "train --task detect --train " + q(w / "detect.aug.jsonl") + " --run-dir " + q(w / "runs"));
  ASSERT_EQ(trained.exit_code, 0) << trained.err;
  const auto model = last_json_line(trained.out);
  EXPECT_EQ(model["tag"], "fine-tuned and augmented");

  const auto evaluated =
      run(w, "evaluate --model " + model["model_id"].get<std::string>() + " --run-dir " + q(w / "runs") +
                 " --test " + q(data / "detect.test.jsonl") + " --out " + q(w / "report.json") + " --write-preds " +
                 q(w / "preds.jsonl"));
  ASSERT_EQ(evaluated.exit_code, 0) << evaluated.err;
  EXPECT_NE(evaluated.out.find("Violent"), std::string::npos);
  EXPECT_EQ(line_count(w / "preds.jsonl"), 500u);

  const auto zs = run(w, "annotate-zeroshot --stub --input " + q(data / "detect.test.jsonl") + " --out " +
                             q(w / "zeroshot.jsonl"));
  ASSERT_EQ(zs.exit_code, 0) << zs.err;
  const auto compared = run(w, "evaluate --preds " + q(w / "preds.jsonl") + " --compare " + q(w / "zeroshot.jsonl") +
                                   " --format csv");
  ASSERT_EQ(compared.exit_code, 0) << compared.err;
  EXPECT_NE(compared.out.find("McNemar"), std::string::npos) << compared.out;

  const auto rendered = run(w, "report --input " + q(w / "report.json"));
  EXPECT_EQ(rendered.exit_code, 0) << rendered.err;
  EXPECT_LT(std::chrono::steady_clock::now() - started, std::chrono::minutes(5));
}

}  // namespace
