// Serial reference kernels against their OpenMP versions. Set
// OMP_NUM_THREADS to choose the parallel width.
#include <benchmark/benchmark.h>

#include <numeric>

#include "sdnguard/data/synthetic.hpp"
#include "sdnguard/explain/tree_shap.hpp"
#include "sdnguard/learn/forest.hpp"
#include "sdnguard/learn/gbdt.hpp"
#include "sdnguard/learn/knn.hpp"
#include "sdnguard/rng.hpp"
#include "sdnguard/stats/mutual_info.hpp"

using namespace sdnguard;

namespace {

const data::Dataset& blobs() {
  static const auto ds = data::generate_synthetic({5, 12, 800, 3.0, 1});
  return ds;
}

void BM_MutualInfo(benchmark::State& st, bool parallel) {
  const auto& ds = blobs();
  for (auto _ : st) {
    auto r = parallel ? stats::mutual_info(ds.X, ds.y, 5, {3, 1, 1e-10})
                      : stats::mutual_info_serial(ds.X, ds.y, 5, {3, 1, 1e-10});
    benchmark::DoNotOptimize(r);
  }
}

const learn::ForestModel& forest() {
  static const auto m = learn::fit_random_forest(blobs().X, blobs().y, 5, {.n_trees = 50}, 2);
  return m;
}

void BM_ForestPredict(benchmark::State& st, bool parallel) {
  const auto& m = forest();
  for (auto _ : st) {
    auto p = parallel ? m.predict_proba(blobs().X) : m.predict_proba_serial(blobs().X);
    benchmark::DoNotOptimize(p);
  }
}

void BM_KnnPredict(benchmark::State& st, bool parallel) {
  static const auto m = learn::fit_knn(blobs().X, blobs().y, 5, 5);
  const auto& X = blobs().X;
  std::vector<std::size_t> rows(500);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto Q = X.select_rows(rows);
  for (auto _ : st) {
    auto p = parallel ? m.predict_proba(Q) : m.predict_proba_serial(Q);
    benchmark::DoNotOptimize(p);
  }
}

void BM_Histograms(benchmark::State& st, bool parallel) {
  const auto& X = blobs().X;
  const auto mapper = learn::BinMapper::fit(X, 256);
  const auto bins = mapper.transform(X);
  std::vector<std::size_t> rows(X.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Rng rng(3);
  std::vector<double> g(X.rows()), h(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    g[i] = rng.normal();
    h[i] = rng.uniform();
  }
  std::vector<std::vector<learn::HistBin>> hist(X.cols());
  for (auto _ : st) {
    if (parallel)
      learn::build_histograms(bins, X.rows(), mapper, rows, g, h, hist);
    else
      learn::build_histograms_serial(bins, X.rows(), mapper, rows, g, h, hist);
    benchmark::DoNotOptimize(hist.data());
  }
}

void BM_TreeShap(benchmark::State& st, bool parallel) {
  const auto& m = forest();
  std::vector<std::size_t> rows(200);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto Q = blobs().X.select_rows(rows);
  for (auto _ : st) {
    auto a = parallel ? explain::tree_shap(m, Q) : explain::tree_shap_serial(m, Q);
    benchmark::DoNotOptimize(a.values.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_MutualInfo, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_MutualInfo, parallel, true)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_ForestPredict, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ForestPredict, parallel, true)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_KnnPredict, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_KnnPredict, parallel, true)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_Histograms, serial, false)->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_Histograms, parallel, true)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_TreeShap, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TreeShap, parallel, true)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
