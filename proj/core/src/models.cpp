#include "strife/models.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <unordered_map>

#include "strife/dataset.hpp"
#include "strife/errors.hpp"
#include "strife/eval.hpp"
#include "strife/text.hpp"

namespace strife::models {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "weights.bin is written in host (little-endian) order");

constexpr char kWeightsMagic[8] = {'S', 'T', 'R', 'F', 'W', '0', '0', '1'};

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Weights init_weights(const TrainConfig& config, std::size_t classes) {
  Weights w;
  w.buckets = config.buckets;
  w.dim = config.dim;
  w.classes = classes;
  std::mt19937_64 rng(config.seed);
  w.embedding.resize(static_cast<std::size_t>(w.buckets) * w.dim);
  for (auto& v : w.embedding) v = static_cast<float>((uniform(rng) * 2.0 - 1.0) * 0.1);
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(w.dim));
  w.head.resize(classes * w.dim);
  for (auto& v : w.head) v = static_cast<float>((uniform(rng) * 2.0 - 1.0) * head_scale);
  w.bias.assign(classes, 0.0f);
  return w;
}

// Averaged embedding of the features.
void hidden(const Weights& w, const std::vector<std::uint32_t>& features, std::vector<double>& h) {
  h.assign(w.dim, 0.0);
  if (features.empty()) return;
  for (auto f : features) {
    const float* row = &w.embedding[static_cast<std::size_t>(f) * w.dim];
    for (std::size_t d = 0; d < w.dim; ++d) h[d] += row[d];
  }
  const double inv = 1.0 / static_cast<double>(features.size());
  for (auto& v : h) v *= inv;
}

void softmax_logits(const Weights& w, const std::vector<double>& h, std::vector<double>& p) {
  p.assign(w.classes, 0.0);
  for (std::size_t c = 0; c < w.classes; ++c) {
    double z = w.bias[c];
    const float* row = &w.head[c * w.dim];
    for (std::size_t d = 0; d < w.dim; ++d) z += row[d] * h[d];
    p[c] = z;
  }
  const double peak = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (auto& v : p) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (auto& v : p) v /= sum;
}

void check_backbone(const std::string& backbone) {
  if (backbone == kSmallBackbone) return;
  if (backbone == "bert-large" || backbone == "roberta-large") {
    fail(ErrorKind::kConfiguration, "backbone '" + backbone +
                                        "' is a full-size encoder; this build has no transformer runtime, use '" +
                                        std::string(kSmallBackbone) + "'");
  }
  fail(ErrorKind::kConfiguration, "unknown backbone '" + backbone + "'");
}

std::string short_tag(std::string_view tag) {
  if (tag == kTagAsIs) return "asis";
  if (tag == kTagAugmented) return "ft-aug";
  return "ft";
}

struct Prepared {
  std::vector<std::uint32_t> features;
  std::size_t label = 0;
};

// Trains in place; returns the final epoch's mean loss.
double fit(Weights& w, const std::vector<Prepared>& data, const TrainConfig& config,
           const std::vector<double>& class_weight) {
  const std::size_t n = data.size();
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;
  const double total_steps = static_cast<double>(steps_per_epoch) * config.epochs;
  std::size_t step = 0;
  double last_loss = 0.0;

  std::vector<double> h;
  std::vector<double> p;
  std::vector<double> dh(w.dim);
  std::vector<double> grad_head(w.classes * w.dim);
  std::vector<double> grad_bias(w.classes);
  std::unordered_map<std::uint32_t, std::vector<double>> grad_emb;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    dataset::seeded_shuffle(order, config.seed + 0x5851f42d4c957f2dULL * static_cast<std::uint64_t>(epoch + 1));
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      std::fill(grad_head.begin(), grad_head.end(), 0.0);
      std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
      grad_emb.clear();

      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = data[order[k]];
        hidden(w, ex.features, h);
        softmax_logits(w, h, p);
        const double weight = class_weight[ex.label];
        epoch_loss += -weight * std::log(std::max(p[ex.label], 1e-12));
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t c = 0; c < w.classes; ++c) {
          const double g = weight * (p[c] - (c == ex.label ? 1.0 : 0.0));
          grad_bias[c] += g;
          const float* row = &w.head[c * w.dim];
          double* gh = &grad_head[c * w.dim];
          for (std::size_t d = 0; d < w.dim; ++d) {
            gh[d] += g * h[d];
            dh[d] += g * row[d];
          }
        }
        if (ex.features.empty()) continue;
        const double inv = 1.0 / static_cast<double>(ex.features.size());
        for (auto f : ex.features) {
          auto& ge = grad_emb[f];
          if (ge.empty()) ge.assign(w.dim, 0.0);
          for (std::size_t d = 0; d < w.dim; ++d) ge[d] += dh[d] * inv;
        }
      }

      const double lr = config.learning_rate * std::max(0.0, 1.0 - static_cast<double>(step) / total_steps);
      const double scale = lr / static_cast<double>(end - start);
      for (std::size_t i = 0; i < grad_head.size(); ++i) w.head[i] -= static_cast<float>(scale * grad_head[i]);
      for (std::size_t c = 0; c < w.classes; ++c) w.bias[c] -= static_cast<float>(scale * grad_bias[c]);
      for (const auto& [f, ge] : grad_emb) {
        float* row = &w.embedding[static_cast<std::size_t>(f) * w.dim];
        for (std::size_t d = 0; d < w.dim; ++d) row[d] -= static_cast<float>(scale * ge[d]);
      }
      ++step;
    }
    last_loss = epoch_loss / static_cast<double>(n);
    spdlog::debug("epoch {} loss {:.4f}", epoch + 1, last_loss);
  }
  return last_loss;
}

std::string fingerprint(Task task, const TrainConfig& config, std::span<const LabeledExample> train) {
  std::string material = std::string(to_string(task)) + "\n" + to_json(config).dump() + "\n";
  for (const auto& e : train) {
    material += e.id;
    material += '\t';
    material += e.label;
    material += '\t';
    material += e.text;
    material += '\n';
  }
  return text::sha256_hex(material).substr(0, 12);
}

ModelHandle train_model(Task task, std::span<const LabeledExample> train, const TrainConfig& config,
                        const LabelRegistry& registry) {
  config.validate();
  check_backbone(config.backbone);
  if (registry.task() != task) fail(ErrorKind::kConfiguration, "registry does not belong to the requested task");
  if (train.empty()) fail(ErrorKind::kConfiguration, "training set is empty");

  std::vector<std::size_t> counts(registry.size(), 0);
  bool augmented = false;
  for (const auto& e : train) {
    if (e.task != task) {
      fail(ErrorKind::kValidation, "example '" + e.id + "' belongs to task " + std::string(to_string(e.task)));
    }
    ++counts[registry.require(e.label)];
    if (!e.provenance.is_original()) augmented = true;
  }
  const auto present = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
  if (present < 2) {
    fail(ErrorKind::kConfiguration, "training set for " + std::string(to_string(task)) +
                                        " has a single class; at least two are required");
  }

  // Validation carve-out: whole source groups (original plus its paraphrases),
  // stratified by label.
  std::vector<LabeledExample> fit_set;
  std::vector<LabeledExample> validation;
  if (config.validation_fraction > 0.0) {
    std::map<std::string, std::vector<const LabeledExample*>> groups;
    std::vector<std::string> group_order;
    for (const auto& e : train) {
      const auto& key = e.parent_id ? *e.parent_id : e.id;
      if (!groups.contains(key)) group_order.push_back(key);
      groups[key].push_back(&e);
    }
    std::vector<std::vector<std::string>> strata(registry.size());
    for (const auto& key : group_order) strata[*registry.index_of(groups[key].front()->label)].push_back(key);
    std::vector<std::size_t> sizes;
    for (const auto& s : strata) sizes.push_back(s.size());
    const auto held = dataset::allocate_test_counts(sizes, 1.0 - config.validation_fraction);
    std::set<std::string> held_keys;
    for (std::size_t c = 0; c < strata.size(); ++c) {
      auto keys = strata[c];
      std::sort(keys.begin(), keys.end());
      std::vector<std::size_t> order(keys.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      dataset::seeded_shuffle(order, config.seed ^ text::fnv1a64(registry.label(c)));
      for (std::size_t i = 0; i < held[c]; ++i) held_keys.insert(keys[order[i]]);
    }
    for (const auto& e : train) {
      const auto& key = e.parent_id ? *e.parent_id : e.id;
      if (!held_keys.contains(key)) {
        fit_set.push_back(e);
      } else if (e.provenance.is_original()) {
        validation.push_back(e);
      }
    }
  } else {
    fit_set.assign(train.begin(), train.end());
  }

  ModelHandle model;
  model.task = task;
  model.registry = registry;
  model.config = config;
  model.augmented = augmented;
  model.tag = std::string(config.as_is ? kTagAsIs : augmented ? kTagAugmented : kTagFineTuned);
  model.model_id = std::string(to_string(task)) + "-" + short_tag(model.tag) + "-" + fingerprint(task, config, train);
  model.trained_at = text::utc_timestamp();
  for (const auto& e : fit_set) ++model.train_counts[e.label];

  const Tokenizer tokenizer(config.max_sequence_length, config.buckets);
  std::vector<Prepared> data;
  data.reserve(fit_set.size());
  std::size_t truncated = 0;
  for (const auto& e : fit_set) {
    auto enc = tokenizer.encode(e.text);
    if (enc.truncated) ++truncated;
    data.push_back({std::move(enc.features), *registry.index_of(e.label)});
  }

  std::vector<double> class_weight(registry.size(), 1.0);
  if (config.class_weighting) {
    std::vector<std::size_t> fit_counts(registry.size(), 0);
    for (const auto& d : data) ++fit_counts[d.label];
    const auto k = std::count_if(fit_counts.begin(), fit_counts.end(), [](std::size_t c) { return c > 0; });
    for (std::size_t c = 0; c < fit_counts.size(); ++c) {
      if (fit_counts[c] > 0) {
        class_weight[c] = static_cast<double>(data.size()) / (static_cast<double>(k) * fit_counts[c]);
      }
    }
  }

  auto weights = std::make_shared<Weights>(init_weights(config, registry.size()));
  if (!config.as_is) model.metrics["train_loss"] = fit(*weights, data, config, class_weight);
  model.weights = weights;
  model.metrics["train_examples"] = static_cast<double>(data.size());
  model.metrics["train_truncated"] = static_cast<double>(truncated);

  auto measure = [&](const std::vector<LabeledExample>& set, const std::string& prefix) {
    if (set.empty()) return;
    std::vector<std::string> preds;
    std::vector<std::string> golds;
    for (const auto& e : set) {
      const auto scores = score_text(model, e.text);
      std::size_t best = 0;
      if (task == Task::kDetect) {
        best = scores.probabilities[0] >= config.threshold ? 0 : 1;
      } else {
        for (std::size_t c = 1; c < scores.probabilities.size(); ++c) {
          if (scores.probabilities[c] > scores.probabilities[best]) best = c;
        }
      }
      preds.push_back(registry.label(best));
      golds.push_back(e.label);
    }
    const auto report = eval::evaluate(preds, golds, registry);
    model.metrics[prefix + "_accuracy"] = report.accuracy;
    model.metrics[prefix + "_weighted_f1"] = report.overall.f1;
    model.metrics[prefix + "_examples"] = static_cast<double>(set.size());
  };
  if (!validation.empty()) {
    measure(validation, "validation");
  } else {
    measure(fit_set, "train");
  }
  return model;
}

std::vector<Prediction> predict_texts(const ModelHandle& model, std::span<const std::string> texts,
                                      std::span<const std::string> passage_ids, std::optional<double> threshold) {
  std::vector<Prediction> out;
  out.reserve(texts.size());
  const auto now = text::utc_timestamp();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto scores = score_text(model, texts[i]);
    Prediction p;
    p.passage_id = passage_ids.empty() ? std::string() : passage_ids[i];
    p.task = model.task;
    p.model_id = model.model_id;
    p.created_at = now;
    p.truncated = scores.truncated;
    p.probabilities = scores.probabilities;
    if (model.task == Task::kDetect) {
      const double t = threshold.value_or(model.config.threshold);
      p.score = scores.probabilities[0];
      p.label = std::string(p.score >= t ? kViolent : kNonViolent);
    } else {
      std::size_t best = 0;
      for (std::size_t c = 1; c < scores.probabilities.size(); ++c) {
        if (scores.probabilities[c] > scores.probabilities[best]) best = c;
      }
      p.label = model.registry.label(best);
      p.score = scores.probabilities[best];
    }
    p.score = std::clamp(p.score, 0.0, 1.0);
    out.push_back(std::move(p));
  }
  return out;
}

void write_weights(const std::filesystem::path& path, const Weights& w) {
  std::string blob(kWeightsMagic, sizeof kWeightsMagic);
  auto put_u32 = [&](std::uint32_t v) { blob.append(reinterpret_cast<const char*>(&v), sizeof v); };
  auto put_floats = [&](const std::vector<float>& v) {
    blob.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
  };
  put_u32(w.buckets);
  put_u32(static_cast<std::uint32_t>(w.dim));
  put_u32(static_cast<std::uint32_t>(w.classes));
  put_floats(w.embedding);
  put_floats(w.head);
  put_floats(w.bias);
  text::write_file_atomic(path, blob);
}

Weights read_weights(const std::filesystem::path& path) {
  const auto blob = text::read_file(path);
  std::size_t pos = 0;
  auto need = [&](std::size_t bytes) {
    if (blob.size() - pos < bytes) fail(ErrorKind::kParse, path.string() + ": truncated weights file");
  };
  need(sizeof kWeightsMagic);
  if (std::memcmp(blob.data(), kWeightsMagic, sizeof kWeightsMagic) != 0) {
    fail(ErrorKind::kParse, path.string() + ": not a weights file");
  }
  pos += sizeof kWeightsMagic;
  auto get_u32 = [&] {
    need(4);
    std::uint32_t v = 0;
    std::memcpy(&v, blob.data() + pos, 4);
    pos += 4;
    return v;
  };
  auto get_floats = [&](std::vector<float>& v, std::size_t n) {
    need(n * sizeof(float));
    v.resize(n);
    std::memcpy(v.data(), blob.data() + pos, n * sizeof(float));
    pos += n * sizeof(float);
  };
  Weights w;
  w.buckets = get_u32();
  w.dim = get_u32();
  w.classes = get_u32();
  get_floats(w.embedding, static_cast<std::size_t>(w.buckets) * w.dim);
  get_floats(w.head, w.classes * w.dim);
  get_floats(w.bias, w.classes);
  if (pos != blob.size()) fail(ErrorKind::kParse, path.string() + ": trailing bytes in weights file");
  return w;
}

}  // namespace

void TrainConfig::validate() const {
  if (max_sequence_length == 0) fail(ErrorKind::kConfiguration, "max_sequence_length must be > 0");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    fail(ErrorKind::kConfiguration, "validation_fraction must lie in [0, 1)");
  }
  if (epochs < 0) fail(ErrorKind::kConfiguration, "epochs must be >= 0");
  if (!(learning_rate > 0.0)) fail(ErrorKind::kConfiguration, "learning_rate must be > 0");
  if (batch_size == 0) fail(ErrorKind::kConfiguration, "batch_size must be > 0");
  if (buckets < 2 || dim == 0) fail(ErrorKind::kConfiguration, "buckets must be >= 2 and dim > 0");
  if (!(threshold >= 0.0 && threshold <= 1.0)) fail(ErrorKind::kConfiguration, "threshold must lie in [0, 1]");
}

nlohmann::json to_json(const TrainConfig& c) {
  return json{{"backbone", c.backbone},
              {"max_sequence_length", c.max_sequence_length},
              {"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"validation_fraction", c.validation_fraction},
              {"buckets", c.buckets},
              {"dim", c.dim},
              {"class_weighting", c.class_weighting},
              {"as_is", c.as_is},
              {"threshold", c.threshold}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.backbone = j.value("backbone", c.backbone);
    c.max_sequence_length = j.value("max_sequence_length", c.max_sequence_length);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.buckets = j.value("buckets", c.buckets);
    c.dim = j.value("dim", c.dim);
    c.class_weighting = j.value("class_weighting", c.class_weighting);
    c.as_is = j.value("as_is", c.as_is);
    c.threshold = j.value("threshold", c.threshold);
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("bad training config: ") + e.what());
  }
  return c;
}

ClassScores score_text(const ModelHandle& model, std::string_view input) {
  if (!model.weights) fail(ErrorKind::kConfiguration, "model '" + model.model_id + "' has no weights");
  const auto& w = *model.weights;
  const Tokenizer tokenizer(model.config.max_sequence_length, w.buckets);
  const auto enc = tokenizer.encode(input);
  std::vector<double> h;
  ClassScores out;
  hidden(w, enc.features, h);
  softmax_logits(w, h, out.probabilities);
  out.truncated = enc.truncated;
  return out;
}

ModelHandle train_detector(std::span<const LabeledExample> train, const TrainConfig& config) {
  if (config.validation_fraction != 0.0) {
    fail(ErrorKind::kConfiguration, "validation_fraction applies to categorization models only");
  }
  return train_model(Task::kDetect, train, config, LabelRegistry::builtin(Task::kDetect));
}

ModelHandle train_categorizer(Task task, std::span<const LabeledExample> train, const TrainConfig& config) {
  if (!is_categorization(task)) {
    fail(ErrorKind::kConfiguration, "train_categorizer needs level, context, motive or consequence");
  }
  return train_categorizer(task, train, config, LabelRegistry::builtin(task));
}

ModelHandle train_categorizer(Task task, std::span<const LabeledExample> train, const TrainConfig& config,
                              const LabelRegistry& registry) {
  if (!is_categorization(task)) {
    fail(ErrorKind::kConfiguration, "train_categorizer needs level, context, motive or consequence");
  }
  return train_model(task, train, config, registry);
}

std::vector<Prediction> predict_violence(const ModelHandle& model, std::span<const Passage> passages,
                                         std::optional<double> threshold) {
  if (model.task != Task::kDetect) {
    fail(ErrorKind::kValidation, "model '" + model.model_id + "' is a " + std::string(to_string(model.task)) +
                                     " model, not a detector");
  }
  if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0)) {
    fail(ErrorKind::kConfiguration, "threshold must lie in [0, 1]");
  }
  std::vector<std::string> texts;
  std::vector<std::string> ids;
  for (const auto& p : passages) {
    texts.push_back(p.text);
    ids.push_back(p.id.empty() ? passage_id_for(p.ref) : p.id);
  }
  return predict_texts(model, texts, ids, threshold);
}

std::vector<Prediction> predict_category(const ModelHandle& model, std::span<const std::string> texts) {
  if (!is_categorization(model.task)) {
    fail(ErrorKind::kValidation, "model '" + model.model_id + "' is a detector, not a categorization model");
  }
  return predict_texts(model, texts, {}, std::nullopt);
}

std::vector<Prediction> predict_category(const ModelHandle& model, std::span<const Passage> passages) {
  std::vector<std::string> texts;
  std::vector<std::string> ids;
  for (const auto& p : passages) {
    texts.push_back(p.text);
    ids.push_back(p.id.empty() ? passage_id_for(p.ref) : p.id);
  }
  if (!is_categorization(model.task)) {
    fail(ErrorKind::kValidation, "model '" + model.model_id + "' is a detector, not a categorization model");
  }
  return predict_texts(model, texts, ids, std::nullopt);
}

std::vector<Prediction> predict(const ModelHandle& model, std::span<const Passage> passages) {
  return model.task == Task::kDetect ? predict_violence(model, passages) : predict_category(model, passages);
}

std::filesystem::path save_model(const ModelHandle& model, const std::filesystem::path& run_dir) {
  if (!model.weights) fail(ErrorKind::kConfiguration, "cannot save a model without weights");
  const auto dir = run_dir / model.model_id;
  std::filesystem::create_directories(dir);
  json config{{"model_id", model.model_id},
              {"task", to_string(model.task)},
              {"tag", model.tag},
              {"augmented", model.augmented},
              {"trained_at", model.trained_at},
              {"train_counts", model.train_counts},
              {"config", to_json(model.config)}};
  text::write_file_atomic(dir / "config.json", config.dump(2) + "\n");
  text::write_file_atomic(dir / "registry.txt", model.registry.to_text());
  write_weights(dir / "weights.bin", *model.weights);
  text::write_file_atomic(dir / "metrics.json", json(model.metrics).dump(2) + "\n");
  return dir;
}

ModelHandle load_model(const std::filesystem::path& model_dir) {
  if (!std::filesystem::is_directory(model_dir)) {
    fail(ErrorKind::kNotFound, "model directory " + model_dir.string() + " does not exist");
  }
  ModelHandle model;
  json config;
  try {
    config = json::parse(text::read_file(model_dir / "config.json"));
    model.model_id = config.at("model_id").get<std::string>();
    model.task = parse_task(config.at("task").get<std::string>());
    model.tag = config.at("tag").get<std::string>();
    model.augmented = config.at("augmented").get<bool>();
    model.trained_at = config.value("trained_at", "");
    model.train_counts = config.value("train_counts", std::map<std::string, std::size_t>{});
    model.config = train_config_from_json(config.at("config"));
    if (std::filesystem::exists(model_dir / "metrics.json")) {
      model.metrics = json::parse(text::read_file(model_dir / "metrics.json")).get<std::map<std::string, double>>();
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, model_dir.string() + ": bad model config: " + e.what());
  }
  model.registry = LabelRegistry::parse(model.task, text::read_file(model_dir / "registry.txt"));
  auto weights = std::make_shared<Weights>(read_weights(model_dir / "weights.bin"));
  if (weights->classes != model.registry.size() || weights->dim != model.config.dim ||
      weights->buckets != model.config.buckets) {
    fail(ErrorKind::kParse, model_dir.string() + ": weights do not match config and registry");
  }
  model.weights = std::move(weights);
  return model;
}

ModelRepository::ModelRepository(std::filesystem::path run_dir) : run_dir_(std::move(run_dir)) {}

std::shared_ptr<const ModelHandle> ModelRepository::get(const std::string& model_id) {
  std::lock_guard lock(mu_);
  if (auto it = loaded_.find(model_id); it != loaded_.end()) return it->second;
  if (run_dir_.empty() || model_id.empty() || model_id.find_first_of("/\\") != std::string::npos ||
      model_id.front() == '.') {
    return nullptr;
  }
  const auto dir = run_dir_ / model_id;
  if (!std::filesystem::exists(dir / "config.json")) return nullptr;
  auto model = std::make_shared<const ModelHandle>(load_model(dir));
  loaded_[model_id] = model;
  return model;
}

std::shared_ptr<const ModelHandle> ModelRepository::add(ModelHandle model) {
  if (!run_dir_.empty()) save_model(model, run_dir_);
  auto shared = std::make_shared<const ModelHandle>(std::move(model));
  std::lock_guard lock(mu_);
  loaded_[shared->model_id] = shared;
  return shared;
}

}  // namespace strife::models
