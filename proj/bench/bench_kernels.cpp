// Serial reference vs OpenMP kernel. Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "stereoscope/agreement.hpp"
#include "stereoscope/corpus.hpp"
#include "stereoscope/explain.hpp"
#include "stereoscope/kde.hpp"
#include "stereoscope/logistic.hpp"
#include "stereoscope/rng.hpp"
#include "stereoscope/tfidf.hpp"

using namespace stereoscope;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

std::vector<double> uniform(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform01();
  return v;
}

const std::vector<std::string>& documents() {
  static const auto docs = [] {
    const auto ds = load_dataset(STEREOSCOPE_SOURCE_DIR "/data/synthetic_corpus.csv", DatasetFormat::csv);
    std::vector<std::string> d;
    for (int rep = 0; rep < 8; ++rep)
      for (const auto& inst : ds.instances) d.push_back(inst.text);
    return d;
  }();
  return docs;
}

void BM_shapley_from_table(benchmark::State& state) {
  const std::size_t n = 16;
  const auto table = uniform(std::size_t{1} << n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(shapley_from_table(table, n, exec_of(state)));
}

void BM_weighted_ridge(benchmark::State& state) {
  const std::size_t n = 14;
  const auto design = lime_design(n, 5000, 2);
  const auto y = uniform(design.size(), 3);
  std::vector<double> w;
  for (const auto& m : design) w.push_back(lime_proximity(m, 0.25));
  for (auto _ : state) benchmark::DoNotOptimize(weighted_ridge(design, y, w, 1e-3, exec_of(state)));
}

void BM_tfidf_transform(benchmark::State& state) {
  const auto& docs = documents();
  const auto vec = TfidfVectorizer::fit(docs);
  for (auto _ : state) benchmark::DoNotOptimize(vec.transform(docs, exec_of(state)));
}

void BM_logistic_objective(benchmark::State& state) {
  const auto& docs = documents();
  const auto X = TfidfVectorizer::fit(docs).transform(docs);
  const auto Xt = X.transpose();
  std::vector<int> y(X.rows);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
  const auto theta = uniform(X.cols + 1, 4);
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(logistic_objective(X, Xt, y, theta, 1.0, &grad, exec_of(state)));
}

void BM_gaussian_kde(benchmark::State& state) {
  const auto values = uniform(20000, 5);
  std::vector<double> grid(512);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i) / 511.0;
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_kde(values, 0.05, grid, exec_of(state)));
}

void BM_score_batch(benchmark::State& state) {
  Rng rng(6);
  std::vector<AttributionPair> pairs(5000);
  for (auto& p : pairs) {
    const std::size_t n = 4 + rng.uniform_index(12);
    p.shap.tokens = p.lime.tokens = std::vector<Token>(n);
    for (std::size_t j = 0; j < n; ++j) {
      p.shap.values.push_back(2.0 * rng.uniform01() - 1.0);
      p.lime.values.push_back(2.0 * rng.uniform01() - 1.0);
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(score_batch(pairs, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_shapley_from_table)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_weighted_ridge)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_tfidf_transform)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_logistic_objective)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gaussian_kde)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_score_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
