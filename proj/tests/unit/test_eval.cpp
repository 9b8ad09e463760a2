#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sdnguard/data/synthetic.hpp"
#include "sdnguard/errors.hpp"
#include "sdnguard/eval/curves.hpp"
#include "sdnguard/eval/metrics.hpp"
#include "sdnguard/eval/svg.hpp"
#include "sdnguard/eval/validation.hpp"
#include "sdnguard/learn/registry.hpp"
#include "sdnguard/rng.hpp"

using namespace sdnguard;
using namespace sdnguard::eval;

namespace {

ConfusionMatrix matrix(std::size_t C, std::vector<std::size_t> counts) { return {C, std::move(counts)}; }

// P(score of a positive > score of a negative), ties counting one half.
double mann_whitney(const std::vector<int>& pos, const std::vector<double>& s) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (pos[i] && !pos[j]) {
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

}  // namespace

TEST_CASE("metrics: two-class hand oracle") {
  // p_o = 35 / 50 = 0.7; p_e = (25*30 + 25*20) / 2500 = 0.5; kappa = 0.2 / 0.5.
  const auto cm = matrix(2, {20, 5, 10, 15});
  CHECK(cohen_kappa(cm) == doctest::Approx(0.4).epsilon(1e-15));
  const auto m = metrics(cm);
  CHECK(m.accuracy == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(m.kappa == doctest::Approx(0.4).epsilon(1e-15));
  // class 0: precision 20/30, recall 20/25; class 1: precision 15/20, recall 15/25
  CHECK(m.per_class[0].precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.per_class[0].recall == doctest::Approx(0.8));
  CHECK(m.per_class[1].precision == doctest::Approx(0.75));
  CHECK(m.per_class[1].recall == doctest::Approx(0.6));
  const double f0 = 2 * (2.0 / 3) * 0.8 / (2.0 / 3 + 0.8), f1 = 2 * 0.75 * 0.6 / 1.35;
  CHECK(m.f1 == doctest::Approx((f0 + f1) / 2));  // equal supports
  CHECK(m.precision == doctest::Approx((2.0 / 3 + 0.75) / 2));
}

TEST_CASE("metrics: perfect and chance agreement") {
  const std::vector<int> y{0, 1, 2, 2, 1, 0, 0};
  const auto perfect = metrics(confusion(y, y, 3));
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.kappa == 1.0);
  // Independent predictions with matched marginals: outer product counts.
  const auto chance = matrix(2, {16, 24, 24, 36});
  CHECK(std::abs(cohen_kappa(chance)) < 1e-12);
  // Single-class perfect agreement has p_e = 1.
  CHECK(cohen_kappa(matrix(2, {10, 0, 0, 0})) == 1.0);
}

TEST_CASE("metrics: kappa is invariant under relabelling") {
  Rng rng(2);
  std::vector<int> t(200), p(200);
  for (std::size_t i = 0; i < 200; ++i) {
    t[i] = static_cast<int>(rng.below(3));
    p[i] = rng.uniform() < 0.7 ? t[i] : static_cast<int>(rng.below(3));
  }
  const int perm[] = {2, 0, 1};
  auto tp = t, pp = p;
  for (auto& v : tp) v = perm[v];
  for (auto& v : pp) v = perm[v];
  CHECK(cohen_kappa(confusion(t, p, 3)) == doctest::Approx(cohen_kappa(confusion(tp, pp, 3))).epsilon(1e-14));
}

TEST_CASE("metrics: zero denominators are reported as 0 and flagged") {
  const auto cm = matrix(3, {5, 0, 0, 0, 5, 0, 3, 0, 0});  // class 2 never predicted
  const auto m = metrics(cm, Averaging::kMacro);
  CHECK(m.per_class[2].precision == 0.0);
  CHECK(m.per_class[2].precision_undefined);
  CHECK_FALSE(m.per_class[2].recall_undefined);
  CHECK(m.averaging == Averaging::kMacro);
  const auto j = m.to_json({"a", "b", "c"});
  CHECK(j["per_class"][2]["precision_undefined"] == true);
  CHECK_THROWS_AS(metrics(matrix(2, {0, 0, 0, 0})), DataError);
  CHECK_THROWS_AS(confusion(std::vector<int>{0, 3}, std::vector<int>{0, 1}, 2), DataError);
}

TEST_CASE("curves: ROC area equals the Mann-Whitney statistic") {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 10 + rng.below(40);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      s[i] = std::round(rng.uniform() * 8) / 8;  // plenty of ties
    }
    y[0] = 1;
    y[1] = 0;
    std::vector<int> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = y[i] == 1;
    const auto c = roc_and_pr(y, s, 1);
    CHECK(c.roc.area == doctest::Approx(mann_whitney(pos, s)).epsilon(1e-12));
    CHECK(c.roc.x.front() == 0.0);
    CHECK(c.roc.y.front() == 0.0);
    CHECK(c.roc.x.back() == 1.0);
    CHECK(c.roc.y.back() == 1.0);
  }
}

TEST_CASE("curves: average precision by hand") {
  // + - + - at descending scores: AP = 0.5 * 1 + 0.5 * 2/3
  const std::vector<int> y{1, 0, 1, 0};
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6};
  const auto c = roc_and_pr(y, s, 1);
  CHECK(c.pr.area == doctest::Approx(0.5 + 1.0 / 3.0).epsilon(1e-15));
  CHECK(c.roc.area == doctest::Approx(0.75));
  const auto missing = roc_and_pr(std::vector<int>{0, 0}, std::vector<double>{0.1, 0.2}, 1);
  CHECK_FALSE(missing.roc.defined);
  CHECK_FALSE(missing.pr.defined);
  CHECK(c.roc.to_csv().rfind("x,y\n", 0) == 0);
}

TEST_CASE("curves: every class from a probability matrix") {
  const Matrix proba(4, 3, std::vector<double>{0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8, 0.6, 0.3, 0.1});
  const std::vector<int> y{0, 1, 2, 0};
  const auto all = all_curves(y, proba);
  REQUIRE(all.size() == 3);
  for (const auto& c : all) CHECK(c.roc.area == 1.0);
}

TEST_CASE("folds: stratified and balanced") {
  std::vector<int> y;
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < (c + 1) * 17; ++k) y.push_back(c);
  const auto fold = stratified_folds(y, 3, 5, 11);
  for (int c = 0; c < 3; ++c) {
    std::vector<std::size_t> per(5, 0);
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == c) ++per[fold[i]];
    const auto [lo, hi] = std::minmax_element(per.begin(), per.end());
    CHECK(*hi - *lo <= 1);
  }
  CHECK(stratified_folds(y, 3, 5, 11) == fold);
  CHECK_THROWS_AS(stratified_folds(y, 3, 1, 11), UsageError);
}

TEST_CASE("cross-validation, learning curve and benchmark") {
  const auto ds = data::generate_synthetic({3, 3, 40, 10.0, 1});
  const auto test = data::generate_synthetic({3, 3, 20, 10.0, 2});
  const auto spec = learn::make_baseline("decision_tree", {});
  const auto cv = stratified_kfold_cv(ds, spec, 5, 3, &test);
  CHECK(cv.fold_accuracy.size() == 5);
  CHECK(cv.mean_accuracy >= 0.95);
  REQUIRE(cv.test_kappa.has_value());
  CHECK(*cv.test_kappa >= 0.95);
  CHECK(cv.to_json()["k"] == 5);

  const std::vector<double> fr{0.25, 0.5, 1.0};
  const auto lc = learning_curve(ds, test, spec, fr, 4);
  CHECK(lc.train_sizes == std::vector<std::size_t>{30, 60, 120});
  CHECK(lc.validation_accuracy.back() >= 0.95);
  const std::vector<double> bad{0.5, 0.5};
  CHECK_THROWS_AS(learning_curve(ds, test, spec, bad, 4), UsageError);
  const auto all = stratified_prefix(ds.y, 3, 1.0, 9);
  CHECK(all.size() == ds.n_rows());

  const std::vector<learn::LearnerSpec> specs{spec, learn::make_baseline("knn", {})};
  const auto rows = benchmark(specs, ds, 1, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].fit_seconds >= 0.0);
  CHECK_FALSE(rows[0].stack_refit_seconds.has_value());
}

TEST_CASE("svg: self-contained documents") {
  const auto cm = matrix(2, {3, 1, 0, 4});
  const auto svg = confusion_svg(cm, {"a<b", "c"});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a&lt;b") != std::string::npos);
  CHECK(svg.find("href") == std::string::npos);
  const auto c = roc_and_pr(std::vector<int>{1, 0}, std::vector<double>{0.9, 0.1}, 1);
  const auto curves = curves_svg({c.roc}, {"x", "y"}, "ROC");
  CHECK(curves.find("polyline") != std::string::npos);
}
