#include <benchmark/benchmark.h>

#include <random>

#include "strife/eval.hpp"
#include "strife/fixture.hpp"
#include "strife/llm.hpp"
#include "strife/models.hpp"
#include "strife/registry.hpp"
#include "strife/tokenizer.hpp"

namespace {

using namespace strife;

std::vector<std::string> random_labels(const LabelRegistry& registry, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, registry.size() - 1);
  std::vector<std::string> out(n);
  for (auto& label : out) label = registry.label(pick(rng));
  return out;
}

const fixture::Fixture& corpus() {
  static const fixture::Fixture f = fixture::generate();
  return f;
}

void BM_Evaluate(benchmark::State& state) {
  const auto& registry = LabelRegistry::builtin(Task::kConsequence);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto preds = random_labels(registry, n, 1);
  const auto golds = random_labels(registry, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(eval::evaluate(preds, golds, registry));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(500)->Arg(5000);

void BM_McNemar(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eval::mcnemar(b, b / 2));
}
BENCHMARK(BM_McNemar)->Arg(50)->Arg(5000);

void BM_TokenizerEncode(benchmark::State& state) {
  const models::Tokenizer tokenizer(512, 1u << 15);
  const auto& passages = corpus().passages;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tokenizer.encode(passages[i].text));
    i = (i + 1) % passages.size();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TokenizerEncode);

void BM_PredictViolence(benchmark::State& state) {
  const auto& passages = corpus().passages;
  std::vector<LabeledExample> train;
  for (std::size_t i = 0; i < 400; ++i) {
    const auto& p = passages[i];
    LabeledExample e;
    e.id = p.id;
    e.source_id = p.id;
    e.text = p.text;
    e.work_id = p.ref.work_id;
    e.label = std::string(i % 2 == 0 ? kViolent : kNonViolent);
    train.push_back(std::move(e));
  }
  models::TrainConfig config;
  config.epochs = 1;
  const auto model = models::train_detector(train, config);
  const std::span<const Passage> batch(passages.data(), 256);
  for (auto _ : state) benchmark::DoNotOptimize(models::predict_violence(model, batch));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_PredictViolence)->Unit(benchmark::kMillisecond);

void BM_ParseZeroShot(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(llm::parse_zero_shot("The passage is [NON-VIOLENT]."));
}
BENCHMARK(BM_ParseZeroShot);

}  // namespace

BENCHMARK_MAIN();
