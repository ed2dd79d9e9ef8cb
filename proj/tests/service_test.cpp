#include <httplib.h>
#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "strife/errors.hpp"
#include "strife/jsonl.hpp"
#include "strife/models.hpp"
#include "strife/service.hpp"
#include "strife/store.hpp"
#include "test_support.hpp"

namespace strife::service {
namespace {

using nlohmann::json;

std::vector<Passage> corpus() {
  const std::vector<std::tuple<std::string, int, int, std::string>> rows{
      {"Alexander", 1, 1, "Alexander seized a spear and ran Cleitus through."},
      {"Alexander", 1, 2, "Alexander studied with Aristotle in Mieza."},
      {"Alexander", 2, 1, "The Macedonians stormed the city and slew its defenders."},
      {"Alexander", 2, 2, "He wrote a letter to his mother about the gifts."},
      {"Caesar", 1, 1, "The conspirators stabbed Caesar in the senate house."},
      {"Caesar", 1, 2, "Caesar reformed the calendar."},
  };
  std::vector<Passage> out;
  for (const auto& [work, ch, sec, text] : rows) {
    SourceRef ref{work, ch, sec};
    out.push_back(Passage{passage_id_for(ref), ref, text, "en"});
  }
  return out;
}

models::ModelHandle toy_model(Task task) {
  std::vector<LabeledExample> train;
  const std::vector<std::string> violent{"killed with a spear", "stabbed him", "slew the defenders", "stormed the city"};
  const std::vector<std::string> calm{"studied philosophy", "wrote a letter", "reformed the calendar", "gave gifts"};
  for (std::size_t i = 0; i < violent.size(); ++i) {
    if (task == Task::kDetect) {
      train.push_back(testing::example("v" + std::to_string(i), violent[i], "violent"));
      train.push_back(testing::example("n" + std::to_string(i), calm[i], "nonviolent"));
    } else {
      train.push_back(testing::example("i" + std::to_string(i), violent[i], "interpersonal", task));
      train.push_back(testing::example("s" + std::to_string(i), calm[i], "intersocial", task));
    }
  }
  models::TrainConfig config;
  config.epochs = 5;
  config.batch_size = 2;
  config.buckets = 1u << 10;
  config.dim = 8;
  return task == Task::kDetect ? models::train_detector(train, config)
                               : models::train_categorizer(task, train, config);
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    store.put_passages(corpus());
    detect_id = repo->add(toy_model(Task::kDetect))->model_id;
    level_id = repo->add(toy_model(Task::kLevel))->model_id;
  }

  void start(ServiceOptions options = {}) {
    service = std::make_unique<Service>(store, repo, options);
    port = service->start("127.0.0.1", 0);
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }

  httplib::Result post(const std::string& path, const json& body) {
    return client->Post(path, body.dump(), "application/json");
  }

  std::string run_job(Task task, const std::string& model_id) {
    auto res = post("/jobs", json{{"task", to_string(task)}, {"model_id", model_id}});
    EXPECT_EQ(res->status, 202) << res->body;
    EXPECT_TRUE(service->wait_idle());
    return json::parse(res->body)["id"];
  }

  CorpusStore store = CorpusStore::open(":memory:");
  std::shared_ptr<models::ModelRepository> repo = std::make_shared<models::ModelRepository>();
  std::string detect_id;
  std::string level_id;
  std::unique_ptr<Service> service;
  std::unique_ptr<httplib::Client> client;
  int port = 0;
};

TEST_F(ServiceTest, HealthNeedsNoToken) {
  start(ServiceOptions{"secret"});
  auto health = client->Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  auto denied = client->Get("/registries/level");
  EXPECT_EQ(denied->status, 401);
  EXPECT_EQ(json::parse(denied->body)["error"], "unauthorized");
  auto allowed = client->Get("/registries/level", httplib::Headers{{"Authorization", "Bearer secret"}});
  EXPECT_EQ(allowed->status, 200);
}

TEST_F(ServiceTest, JobRunsAndIsIdempotent) {
  start();
  auto res = post("/jobs", json{{"task", "detect"}, {"model_id", detect_id}, {"works", {"Caesar", "Alexander"}}});
  ASSERT_EQ(res->status, 202) << res->body;
  const auto job = json::parse(res->body);
  EXPECT_EQ(job["status"], "queued");
  EXPECT_EQ(job["total"], 6);
  ASSERT_TRUE(service->wait_idle());

  auto status = client->Get("/jobs/" + job["id"].get<std::string>());
  const auto done = json::parse(status->body);
  EXPECT_EQ(done["status"], "done");
  EXPECT_EQ(done["processed"], 6);
  std::size_t counted = 0;
  for (const auto& [label, n] : done["counts"].items()) counted += n.get<std::size_t>();
  EXPECT_EQ(counted, 6u);

  auto again = post("/jobs", json{{"task", "detect"}, {"model_id", detect_id}, {"works", {"Alexander", "Caesar"}}});
  EXPECT_EQ(again->status, 200);
  EXPECT_EQ(json::parse(again->body)["id"], job["id"]);
  auto forced = post("/jobs", json{{"task", "detect"},
                                   {"model_id", detect_id},
                                   {"works", {"Alexander", "Caesar"}},
                                   {"force", true}});
  EXPECT_EQ(forced->status, 202);
  ASSERT_TRUE(service->wait_idle());
  EXPECT_EQ(store.predictions(Task::kDetect).size(), 12u);
}

TEST_F(ServiceTest, JobErrors) {
  start();
  EXPECT_EQ(post("/jobs", json{{"task", "detect"}, {"model_id", "nope"}})->status, 404);
  EXPECT_EQ(post("/jobs", json{{"task", "level"}, {"model_id", detect_id}})->status, 422);
  EXPECT_EQ(post("/jobs", json{{"task", "mood"}, {"model_id", detect_id}})->status, 422);
  EXPECT_EQ(post("/jobs", json{{"model_id", detect_id}})->status, 400);
  EXPECT_EQ(client->Post("/jobs", "{not json", "application/json")->status, 400);
  auto empty = post("/jobs", json{{"task", "detect"}, {"model_id", detect_id}, {"works", {"Thucydides"}}});
  EXPECT_EQ(empty->status, 400);
  EXPECT_EQ(json::parse(empty->body)["error"], "validation");
  EXPECT_EQ(client->Get("/jobs/job-missing")->status, 404);
}

TEST_F(ServiceTest, PassagesPredictionsAndRegistries) {
  start();
  auto passage = client->Get("/passages/Alexander:1.1");
  ASSERT_EQ(passage->status, 200);
  EXPECT_EQ(json::parse(passage->body)["citation"], "Alexander 1.1");
  EXPECT_EQ(client->Get("/passages/Alexander:9.9")->status, 404);

  run_job(Task::kDetect, detect_id);
  const auto pred = store.predictions(Task::kDetect).front();
  auto fetched = client->Get("/predictions/" + pred.id);
  ASSERT_EQ(fetched->status, 200);
  EXPECT_EQ(json::parse(fetched->body)["passage_id"], pred.passage_id);
  EXPECT_EQ(client->Get("/predictions/pred-none")->status, 404);

  auto registry = json::parse(client->Get("/registries/consequence")->body);
  EXPECT_EQ(registry["labels"].size(), 38u);
  EXPECT_EQ(client->Get("/registries/mood")->status, 422);
}

TEST_F(ServiceTest, QueueIsOrderedByUncertaintyAndPaged) {
  start();
  run_job(Task::kDetect, detect_id);
  auto res = client->Get("/review/queue?task=detect&limit=4");
  ASSERT_EQ(res->status, 200);
  const auto page = json::parse(res->body);
  EXPECT_EQ(page["total"], 6);
  ASSERT_EQ(page["items"].size(), 4u);
  double previous = -1.0;
  for (const auto& item : page["items"]) {
    const double u = std::abs(item["score"].get<double>() - 0.5);
    EXPECT_GE(u, previous);
    previous = u;
    EXPECT_FALSE(item["citation"].get<std::string>().empty());
    EXPECT_EQ(item["passage"]["id"], item["prediction"]["passage_id"]);
  }
  auto rest = json::parse(client->Get("/review/queue?task=detect&limit=4&offset=4")->body);
  EXPECT_EQ(rest["items"].size(), 2u);
  EXPECT_EQ(client->Get("/review/queue")->status, 400);
  EXPECT_EQ(client->Get("/review/queue?task=detect&limit=-1")->status, 400);
  EXPECT_EQ(client->Get("/review/queue?task=detect&status=done")->status, 400);
}

TEST_F(ServiceTest, CategoryQueueUsesEntropy) {
  start();
  run_job(Task::kLevel, level_id);
  const auto page = json::parse(client->Get("/review/queue?task=level")->body);
  ASSERT_EQ(page["items"].size(), 6u);
  double previous = -1e9;
  for (const auto& item : page["items"]) {
    EXPECT_GE(item["uncertainty"].get<double>(), previous);
    previous = item["uncertainty"].get<double>();
  }
}

TEST_F(ServiceTest, VerdictsAndFeedbackExport) {
  start();
  run_job(Task::kDetect, detect_id);
  const auto preds = store.predictions(Task::kDetect);
  auto accepted = post("/review/" + preds[0].id + "/verdict", json{{"decision", "accept"}, {"reviewer", "h"}});
  ASSERT_EQ(accepted->status, 200) << accepted->body;
  EXPECT_EQ(post("/review/" + preds[0].id + "/verdict", json{{"decision", "accept"}, {"reviewer", "h"}})->status,
            409);
  EXPECT_EQ(post("/review/pred-none/verdict", json{{"decision", "accept"}, {"reviewer", "h"}})->status, 404);
  EXPECT_EQ(post("/review/" + preds[1].id + "/verdict", json{{"decision", "relabel"}, {"reviewer", "h"}})->status,
            422);
  EXPECT_EQ(post("/review/" + preds[1].id + "/verdict", json{{"decision", "maybe"}, {"reviewer", "h"}})->status,
            422);
  auto relabel = post("/review/" + preds[1].id + "/verdict",
                      json{{"decision", "relabel"}, {"reviewer", "h"}, {"corrected_label", "violent"}});
  ASSERT_EQ(relabel->status, 200) << relabel->body;

  auto queue = json::parse(client->Get("/review/queue?task=detect")->body);
  EXPECT_EQ(queue["total"], 4);

  auto exported = client->Get("/export/feedback?task=detect");
  ASSERT_EQ(exported->status, 200);
  EXPECT_EQ(exported->get_header_value("Content-Type"), "application/x-ndjson");
  const auto rows = jsonl::parse(exported->body);
  ASSERT_EQ(rows.size(), 2u);
  const auto second = jsonl::example_from_json(rows[1]);
  EXPECT_EQ(second.label, "violent");
  EXPECT_EQ(second.source_id, preds[1].passage_id);
  EXPECT_TRUE(client->Get("/export/feedback?task=level")->body.empty());
  EXPECT_EQ(client->Get("/export/feedback")->status, 400);
}

TEST(PortFromEnv, ParsesOrFallsBack) {
  ::unsetenv("STRIFE_PORT");
  EXPECT_EQ(port_from_env(8080), 8080);
  ::setenv("STRIFE_PORT", "9001", 1);
  EXPECT_EQ(port_from_env(8080), 9001);
  ::setenv("STRIFE_PORT", "http", 1);
  EXPECT_THROW(port_from_env(8080), Error);
  ::unsetenv("STRIFE_PORT");
}

}  // namespace
}  // namespace strife::service
