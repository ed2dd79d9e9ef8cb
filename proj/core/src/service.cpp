#include "strife/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <thread>

#include "strife/errors.hpp"
#include "strife/jsonl.hpp"

namespace strife::service {
namespace {

using nlohmann::json;

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return 422;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kParse:
    case ErrorKind::kConfiguration: return 400;
    case ErrorKind::kClient:
    case ErrorKind::kFormat: return 502;
    case ErrorKind::kIo: return 500;
  }
  return 500;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, std::string_view message) {
  send_json(res, status, json{{"error", kind}, {"message", message}});
}

json job_json(const AnnotationJob& job) {
  return json{{"id", job.id},
              {"task", to_string(job.task)},
              {"model_id", job.model_id},
              {"works", job.works},
              {"status", to_string(job.status)},
              {"processed", job.processed},
              {"total", job.total},
              {"counts", job.label_counts},
              {"error", job.error},
              {"created_at", job.created_at}};
}

json passage_json(const Passage& p) {
  auto j = jsonl::to_json(p);
  j["citation"] = p.ref.display();
  return j;
}

double uncertainty(const Prediction& p) {
  if (p.task == Task::kDetect) return std::abs(p.score - 0.5);
  // Lower is more uncertain, so negate the entropy.
  double h = 0.0;
  if (p.probabilities.empty()) {
    for (double q : {p.score, 1.0 - p.score}) {
      if (q > 0.0) h -= q * std::log(q);
    }
  } else {
    for (double q : p.probabilities) {
      if (q > 0.0) h -= q * std::log(q);
    }
  }
  return -h;
}

Task task_param(const httplib::Request& req) {
  if (!req.has_param("task")) fail(ErrorKind::kParse, "query parameter 'task' is required");
  return parse_task(req.get_param_value("task"));
}

std::size_t size_param(const httplib::Request& req, const char* name, std::size_t fallback, std::size_t max) {
  if (!req.has_param(name)) return fallback;
  const auto raw = req.get_param_value(name);
  std::size_t value = 0;
  try {
    std::size_t used = 0;
    const long long parsed = std::stoll(raw, &used);
    if (used != raw.size() || parsed < 0) throw std::invalid_argument(raw);
    value = static_cast<std::size_t>(parsed);
  } catch (const std::exception&) {
    fail(ErrorKind::kParse, std::string("query parameter '") + name + "' must be a non-negative integer");
  }
  return std::min(value, max);
}

json parse_body(const httplib::Request& req) {
  try {
    auto body = json::parse(req.body.empty() ? std::string("{}") : req.body);
    if (!body.is_object()) fail(ErrorKind::kParse, "request body must be a JSON object");
    return body;
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("request body is not valid JSON: ") + e.what());
  }
}

}  // namespace

struct Service::Impl {
  CorpusStore& store;
  std::shared_ptr<models::ModelRepository> models;
  ServiceOptions options;
  httplib::Server server;
  std::thread listener;

  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> queue;
  bool busy = false;
  bool stopping = false;
  std::thread worker;
  std::mutex submit_mu;

  Impl(CorpusStore& s, std::shared_ptr<models::ModelRepository> m, ServiceOptions o)
      : store(s), models(std::move(m)), options(std::move(o)) {
    if (!models) fail(ErrorKind::kConfiguration, "service needs a model repository");
    if (options.batch_size == 0) options.batch_size = 1;
    routes();
    worker = std::thread([this] { work(); });
  }

  ~Impl() {
    server.stop();
    if (listener.joinable()) listener.join();
    {
      std::lock_guard lock(mu);
      stopping = true;
    }
    cv.notify_all();
    if (worker.joinable()) worker.join();
  }

  void enqueue(const std::string& job_id) {
    {
      std::lock_guard lock(mu);
      queue.push_back(job_id);
    }
    cv.notify_all();
  }

  void work() {
    while (true) {
      std::string id;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        id = queue.front();
        queue.pop_front();
        busy = true;
      }
      run_job(id);
      {
        std::lock_guard lock(mu);
        busy = false;
      }
      cv.notify_all();
    }
  }

  void run_job(const std::string& id) {
    auto job = store.get_job(id);
    if (!job) return;
    try {
      auto model = models->get(job->model_id);
      if (!model) fail(ErrorKind::kNotFound, "model '" + job->model_id + "' disappeared");
      job->status = JobStatus::kRunning;
      store.update_job(*job);
      const auto passages = store.passages(job->works);
      job->total = passages.size();
      for (std::size_t start = 0; start < passages.size(); start += options.batch_size) {
        const auto end = std::min(passages.size(), start + options.batch_size);
        auto preds = models::predict(*model, std::span(passages).subspan(start, end - start));
        for (auto& p : preds) p.job_id = job->id;
        store.put_predictions(preds);
        for (const auto& p : preds) ++job->label_counts[p.label];
        job->processed += preds.size();
        store.update_job(*job);
      }
      job->status = JobStatus::kDone;
      store.update_job(*job);
      spdlog::info("job {} done: {} passages", job->id, job->processed);
    } catch (const std::exception& e) {
      spdlog::error("job {} failed: {}", id, e.what());
      job->status = JobStatus::kFailed;
      job->error = e.what();
      try {
        store.update_job(*job);
      } catch (const std::exception& inner) {
        spdlog::error("could not record failure of job {}: {}", id, inner.what());
      }
    }
  }

  void routes() {
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (options.token.empty() || req.path == "/health") return httplib::Server::HandlerResponse::Unhandled;
      if (req.get_header_value("Authorization") == "Bearer " + options.token) {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      send_error(res, 401, "unauthorized", "missing or wrong bearer token");
      return httplib::Server::HandlerResponse::Handled;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const Error& e) {
        send_error(res, http_status(e.kind()), to_string(e.kind()), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    });

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, json{{"status", "ok"}});
    });

    server.Post("/jobs", [this](const httplib::Request& req, httplib::Response& res) { post_job(req, res); });

    server.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto job = store.get_job(req.matches[1]);
      if (!job) fail(ErrorKind::kNotFound, "no job '" + std::string(req.matches[1]) + "'");
      send_json(res, 200, job_json(*job));
    });

    server.Get(R"(/passages/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto passage = store.get_passage(req.matches[1]);
      if (!passage) fail(ErrorKind::kNotFound, "no passage '" + std::string(req.matches[1]) + "'");
      send_json(res, 200, passage_json(*passage));
    });

    server.Get(R"(/predictions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto pred = store.get_prediction(req.matches[1]);
      if (!pred) fail(ErrorKind::kNotFound, "no prediction '" + std::string(req.matches[1]) + "'");
      send_json(res, 200, jsonl::to_json(*pred));
    });

    server.Get(R"(/registries/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto task = parse_task(req.matches[1].str());
      json labels = json::array();
      for (const auto& e : store.registries().get(task).entries()) {
        labels.push_back(json{{"label", e.label}, {"description", e.description}, {"unverified", e.unverified}});
      }
      send_json(res, 200, json{{"task", to_string(task)}, {"labels", labels}});
    });

    server.Get("/review/queue", [this](const httplib::Request& req, httplib::Response& res) { queue_page(req, res); });

    server.Post(R"(/review/([^/]+)/verdict)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      auto verdict = jsonl::verdict_from_json(json{{"prediction_id", req.matches[1].str()},
                                                   {"decision", body.value("decision", "")},
                                                   {"reviewer", body.value("reviewer", "")}});
      if (body.contains("corrected_label") && !body.at("corrected_label").is_null()) {
        if (!body.at("corrected_label").is_string()) fail(ErrorKind::kParse, "corrected_label must be a string");
        verdict.corrected_label = body.at("corrected_label").get<std::string>();
      }
      send_json(res, 200, jsonl::to_json(store.record_verdict(std::move(verdict))));
    });

    server.Get("/export/feedback", [this](const httplib::Request& req, httplib::Response& res) {
      const auto task = task_param(req);
      auto rows = std::make_shared<std::vector<LabeledExample>>(store.export_feedback(task));
      res.status = 200;
      if (rows->empty()) {
        res.set_content("", "application/x-ndjson");
        return;
      }
      auto next = std::make_shared<std::size_t>(0);
      res.set_chunked_content_provider("application/x-ndjson",
                                       [rows, next](std::size_t, httplib::DataSink& sink) {
                                         if (*next < rows->size()) {
                                           const auto line = jsonl::to_json((*rows)[(*next)++]).dump() + "\n";
                                           sink.write(line.data(), line.size());
                                         }
                                         if (*next >= rows->size()) sink.done();
                                         return true;
                                       });
    });
  }

  void post_job(const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    if (!body.contains("task") || !body.at("task").is_string()) fail(ErrorKind::kParse, "'task' is required");
    if (!body.contains("model_id") || !body.at("model_id").is_string()) {
      fail(ErrorKind::kParse, "'model_id' is required");
    }
    const auto task = parse_task(body.at("task").get<std::string>());
    const auto model_id = body.at("model_id").get<std::string>();
    std::vector<std::string> works;
    if (body.contains("works")) {
      if (!body.at("works").is_array()) fail(ErrorKind::kParse, "'works' must be an array of work ids");
      for (const auto& w : body.at("works")) {
        if (!w.is_string()) fail(ErrorKind::kParse, "'works' must be an array of work ids");
        works.push_back(w.get<std::string>());
      }
    }
    std::sort(works.begin(), works.end());
    works.erase(std::unique(works.begin(), works.end()), works.end());
    const bool force = body.value("force", false);

    auto model = models->get(model_id);
    if (!model) fail(ErrorKind::kNotFound, "unknown model '" + model_id + "'");
    if (model->task != task) {
      fail(ErrorKind::kValidation, "model '" + model_id + "' is a " + std::string(to_string(model->task)) +
                                       " model, not " + std::string(to_string(task)));
    }
    const auto matching = store.passages(works);
    if (matching.empty()) {
      send_error(res, 400, "validation", "no passages match the work filter");
      return;
    }

    std::lock_guard lock(submit_mu);
    if (!force) {
      if (auto existing = store.find_job(task, model_id, works); existing && existing->status != JobStatus::kFailed) {
        send_json(res, 200, job_json(*existing));
        return;
      }
    }
    AnnotationJob job;
    job.id = make_id("job");
    job.task = task;
    job.model_id = model_id;
    job.works = works;
    job.total = matching.size();
    job = store.put_job(job);
    enqueue(job.id);
    send_json(res, 202, job_json(job));
  }

  void queue_page(const httplib::Request& req, httplib::Response& res) {
    const auto task = task_param(req);
    const auto status = req.has_param("status") ? req.get_param_value("status") : std::string("pending");
    if (status != "pending") fail(ErrorKind::kParse, "only status=pending is supported");
    const auto limit = size_param(req, "limit", 50, 1000);
    const auto offset = size_param(req, "offset", 0, SIZE_MAX);

    auto pending = store.pending_predictions(task);
    std::vector<std::pair<double, const Prediction*>> ranked;
    ranked.reserve(pending.size());
    for (const auto& p : pending) ranked.emplace_back(uncertainty(p), &p);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second->id < b.second->id;
    });

    json items = json::array();
    for (std::size_t i = offset; i < ranked.size() && items.size() < limit; ++i) {
      const auto& p = *ranked[i].second;
      auto passage = store.get_passage(p.passage_id);
      if (!passage) continue;
      items.push_back(json{{"prediction", jsonl::to_json(p)},
                           {"passage", passage_json(*passage)},
                           {"citation", passage->ref.display()},
                           {"score", p.score},
                           {"uncertainty", ranked[i].first}});
    }
    send_json(res, 200,
              json{{"task", to_string(task)}, {"total", ranked.size()}, {"offset", offset}, {"items", items}});
  }
};

ServiceOptions options_from_env() {
  ServiceOptions options;
  if (const char* token = std::getenv("STRIFE_TOKEN")) options.token = token;
  return options;
}

int port_from_env(int fallback) {
  const char* raw = std::getenv("STRIFE_PORT");
  if (!raw || !*raw) return fallback;
  try {
    std::size_t used = 0;
    const int port = std::stoi(raw, &used);
    if (used == std::string_view(raw).size() && port >= 0 && port <= 65535) return port;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::kConfiguration, std::string("STRIFE_PORT must be a port number, got '") + raw + "'");
}

Service::Service(CorpusStore& store, std::shared_ptr<models::ModelRepository> models, ServiceOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(models), std::move(options))) {}

Service::~Service() = default;

int Service::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) fail(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::run(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port)) {
    fail(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  spdlog::info("serving on {}:{}", host, port);
  impl_->server.listen_after_bind();
}

void Service::stop() { impl_->server.stop(); }

bool Service::wait_idle(std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->mu);
  return impl_->cv.wait_for(lock, timeout, [&] { return impl_->queue.empty() && !impl_->busy; });
}

}  // namespace strife::service
