#include <benchmark/benchmark.h>

#include "seqcl/corpus.hpp"
#include "seqcl/difficulty.hpp"
#include "seqcl/metrics.hpp"
#include "seqcl/model.hpp"
#include "seqcl/reweighter.hpp"
#include "seqcl/scheduler.hpp"

using namespace seqcl;

namespace {

SentencePair bench_pair(std::uint32_t vocab, std::size_t len, std::uint64_t seed) {
  Rng rng(seed);
  SentencePair pair;
  pair.id = 0;
  pair.source.resize(len);
  pair.target.resize(len);
  for (auto& t : pair.source) t = kFirstRealToken + TokenId(rng.below(vocab - kFirstRealToken));
  for (auto& t : pair.target) t = kFirstRealToken + TokenId(rng.below(vocab - kFirstRealToken));
  return pair;
}

void BM_ForwardTeacherForced(benchmark::State& state) {
  ModelParams params = init_params(ModelDims{50, 32, 64}, 0.0, 1);
  SentencePair pair = bench_pair(50, std::size_t(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_teacher_forced(params, pair, false, nullptr));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardTeacherForced)->Arg(8)->Arg(16)->Arg(32);

void BM_GradBatch(benchmark::State& state) {
  ModelParams params = init_params(ModelDims{50, 32, 64}, 0.0, 1);
  std::vector<SentencePair> pairs;
  for (int i = 0; i < state.range(0); ++i) pairs.push_back(bench_pair(50, 10, 3 + i));
  std::vector<WeightedPair> batch;
  for (auto& p : pairs) batch.push_back(WeightedPair{&p, {}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad(params, batch));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GradBatch)->Arg(8)->Arg(32);

void BM_McDropoutStats(benchmark::State& state) {
  ModelParams params = init_params(ModelDims{50, 32, 64}, 0.3, 1);
  SentencePair pair = bench_pair(50, 10, 2);
  std::uint64_t pass = 0;
  for (auto _ : state) {
    Rng rng(derive_seed(7, "bench-mc", pass++));
    benchmark::DoNotOptimize(mc_dropout_stats(params, pair, 5, rng));
  }
}
BENCHMARK(BM_McDropoutStats);

void BM_CdfNormalize(benchmark::State& state) {
  Rng rng(4);
  std::vector<double> raw(std::size_t(state.range(0)));
  for (double& r : raw) r = rng.uniform01() * 5.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cdf_normalize(raw));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CdfNormalize)->Arg(1000)->Arg(10000);

void BM_AvailablePool(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> raw(std::size_t(state.range(0)));
  for (double& r : raw) r = rng.uniform01() * 5.0;
  std::vector<double> norm = cdf_normalize(raw);
  for (auto _ : state) {
    benchmark::DoNotOptimize(available_pool(norm, 0.4, 8));
  }
}
BENCHMARK(BM_AvailablePool)->Arg(5000);

void BM_ExtractEdits(benchmark::State& state) {
  Rng rng(6);
  const std::size_t len = std::size_t(state.range(0));
  SentencePair pair = bench_pair(50, len, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_edits(pair.source, pair.target));
  }
}
BENCHMARK(BM_ExtractEdits)->Arg(10)->Arg(30);

void BM_Competence(benchmark::State& state) {
  CompetenceSchedule sched{0.01, 2.0, 1000};
  std::uint64_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(competence(sched, t++ % 2000));
  }
}
BENCHMARK(BM_Competence);

}  // namespace

BENCHMARK_MAIN();
