#include "sdnguard/eval/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sdnguard/errors.hpp"
#include "sdnguard/eval/metrics.hpp"
#include "sdnguard/rng.hpp"
#include "sdnguard/stack/stack.hpp"

namespace sdnguard::eval {

std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t n_classes, std::size_t k,
                                          std::uint64_t seed) {
  if (k < 2) throw UsageError("cross-validation needs k >= 2");
  if (y.size() < k) throw DataError("fewer rows than folds");
  std::vector<std::size_t> fold(y.size());
  auto groups = data::rows_by_class(y, n_classes);
  // Continue the round robin across classes so fold sizes stay balanced too.
  std::size_t next = 0;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    auto& g = groups[c];
    Rng rng(derive_seed(seed, c));
    rng.shuffle(std::span<std::size_t>(g));
    for (auto r : g) fold[r] = next++ % k;
  }
  return fold;
}

nlohmann::json CvReport::to_json() const {
  nlohmann::json j = {{"k", k}, {"seed", seed}, {"fold_accuracy", fold_accuracy}, {"mean_accuracy", mean_accuracy}};
  j["test_kappa"] = test_kappa ? nlohmann::json(*test_kappa) : nlohmann::json(nullptr);
  return j;
}

CvReport stratified_kfold_cv(const data::Dataset& ds, const learn::LearnerSpec& learner, std::size_t k,
                             std::uint64_t seed, const data::Dataset* test) {
  const auto fold = stratified_folds(ds.y, ds.n_classes(), k, derive_seed(seed, "folds"));
  CvReport rep;
  rep.k = k;
  rep.seed = seed;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> in, out;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) (fold[i] == f ? out : in).push_back(i);
    const auto train = ds.subset(in);
    const auto held = ds.subset(out);
    auto model = learner.fit(train.X, train.y, ds.n_classes(), derive_seed(seed, "fold" + std::to_string(f)));
    rep.fold_accuracy.push_back(accuracy(held.y, model->predict(held.X)));
  }
  double s = 0.0;
  for (double a : rep.fold_accuracy) s += a;
  rep.mean_accuracy = s / static_cast<double>(k);
  if (test) {
    auto model = learner.fit(ds.X, ds.y, ds.n_classes(), derive_seed(seed, "full"));
    rep.test_kappa = cohen_kappa(confusion(test->y, model->predict(test->X), ds.n_classes()));
  }
  return rep;
}

std::vector<std::size_t> stratified_prefix(std::span<const int> y, std::size_t n_classes, double fraction,
                                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("learning-curve fractions must lie in (0, 1]");
  auto groups = data::rows_by_class(y, n_classes);
  std::vector<std::size_t> rows;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    auto& g = groups[c];
    if (g.empty()) continue;
    Rng rng(derive_seed(seed, c));
    rng.shuffle(std::span<std::size_t>(g));
    auto take = static_cast<std::size_t>(std::floor(static_cast<double>(g.size()) * fraction + 0.5));
    take = std::clamp<std::size_t>(take, 1, g.size());
    rows.insert(rows.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

nlohmann::json LearningCurve::to_json() const {
  return {{"fractions", fractions},
          {"train_sizes", train_sizes},
          {"train_accuracy", train_accuracy},
          {"validation_accuracy", validation_accuracy}};
}

LearningCurve learning_curve(const data::Dataset& train, const data::Dataset& validation,
                             const learn::LearnerSpec& learner, std::span<const double> fractions,
                             std::uint64_t seed) {
  if (fractions.empty()) throw UsageError("learning curve needs at least one fraction");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) throw UsageError("learning-curve fractions must lie in (0, 1]");
    if (i > 0 && !(fractions[i] > fractions[i - 1]))
      throw UsageError("learning-curve fractions must be strictly increasing");
  }
  LearningCurve lc;
  for (double f : fractions) {
    const auto rows = stratified_prefix(train.y, train.n_classes(), f, derive_seed(seed, "prefix"));
    const auto part = train.subset(rows);
    auto model = learner.fit(part.X, part.y, train.n_classes(), seed);
    lc.fractions.push_back(f);
    lc.train_sizes.push_back(rows.size());
    lc.train_accuracy.push_back(accuracy(part.y, model->predict(part.X)));
    lc.validation_accuracy.push_back(accuracy(validation.y, model->predict(validation.X)));
  }
  return lc;
}

std::vector<BenchmarkRow> benchmark(std::span<const learn::LearnerSpec> learners, const data::Dataset& ds,
                                    std::uint64_t seed, std::size_t repeats) {
  using clock = std::chrono::steady_clock;
  if (repeats == 0) throw UsageError("benchmark needs at least one repeat");
  std::vector<BenchmarkRow> rows;
  for (const auto& l : learners) {
    BenchmarkRow row{l.name, HUGE_VAL, std::nullopt, std::nullopt};
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto t0 = clock::now();
      auto model = l.fit(ds.X, ds.y, ds.n_classes(), derive_seed(seed, l.name));
      const double secs = std::chrono::duration<double>(clock::now() - t0).count();
      if (secs < row.fit_seconds) {
        row.fit_seconds = secs;
        if (auto* s = dynamic_cast<const stack::StackModel*>(model.get())) {
          row.stack_base_meta_seconds = s->provenance().seconds_base_and_meta;
          row.stack_refit_seconds = s->provenance().seconds_refit;
        }
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const std::vector<BenchmarkRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {{"model", r.name}, {"fit_seconds", r.fit_seconds}};
    if (r.stack_base_meta_seconds) j["base_and_meta_seconds"] = *r.stack_base_meta_seconds;
    if (r.stack_refit_seconds) j["refit_seconds"] = *r.stack_refit_seconds;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace sdnguard::eval
