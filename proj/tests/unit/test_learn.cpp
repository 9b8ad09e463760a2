#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdnguard/data/synthetic.hpp"
#include "sdnguard/errors.hpp"
#include "sdnguard/learn/forest.hpp"
#include "sdnguard/learn/gbdt.hpp"
#include "sdnguard/learn/knn.hpp"
#include "sdnguard/learn/mlp.hpp"
#include "sdnguard/learn/registry.hpp"
#include "sdnguard/rng.hpp"

using namespace sdnguard;
using namespace sdnguard::learn;

namespace {

struct Blobs {
  data::Dataset train, test;
};

Blobs blobs(double sep, std::uint64_t seed, std::size_t per_class = 80) {
  auto all = data::generate_synthetic({3, 4, per_class, sep, seed});
  std::vector<std::size_t> tr, te;
  for (std::size_t i = 0; i < all.n_rows(); ++i) (i % 4 == 0 ? te : tr).push_back(i);
  return {all.subset(tr), all.subset(te)};
}

double accuracy(const Classifier& m, const data::Dataset& ds) {
  const auto pred = m.predict(ds.X);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == ds.y[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

// Weighted Gini score sum_c nL_c^2 / nL + sum_c nR_c^2 / nR of splitting
// feature f at threshold t; maximizing it minimizes child impurity.
double split_score(const Matrix& X, const std::vector<int>& y, std::size_t C, std::size_t f, double t) {
  std::vector<double> l(C, 0.0), r(C, 0.0);
  double nl = 0, nr = 0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    if (X(i, f) <= t) {
      l[static_cast<std::size_t>(y[i])] += 1;
      nl += 1;
    } else {
      r[static_cast<std::size_t>(y[i])] += 1;
      nr += 1;
    }
  }
  double s = 0;
  for (std::size_t c = 0; c < C; ++c) s += l[c] * l[c] / nl + r[c] * r[c] / nr;
  return s;
}

struct Candidate {
  std::size_t f;
  double t;
  double score;
};

std::vector<Candidate> all_root_splits(const Matrix& X, const std::vector<int>& y, std::size_t C) {
  std::vector<Candidate> out;
  for (std::size_t f = 0; f < X.cols(); ++f) {
    auto v = X.column(f);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      const double t = (v[k] + v[k + 1]) / 2;
      out.push_back({f, t, split_score(X, y, C, f, t)});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("cart: root split equals exhaustive enumeration") {
  Rng rng(2024);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 5 + rng.below(46), d = 1 + rng.below(3), C = 2 + rng.below(2);
    Matrix X(n, d);
    std::vector<int> y(n);
    const bool ints = t % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(C));
      for (std::size_t j = 0; j < d; ++j) X(i, j) = ints ? static_cast<double>(rng.below(6)) : rng.normal();
    }
    const auto cands = all_root_splits(X, y, C);
    const auto model = fit_decision_tree(X, y, C, {}, 1);
    const auto& tree = model.tree();
    if (cands.empty() || std::all_of(y.begin(), y.end(), [&](int v) { return v == y[0]; })) {
      CHECK(tree.is_leaf(0));
      continue;
    }
    REQUIRE_FALSE(tree.is_leaf(0));
    double best = -1;
    for (const auto& c : cands) best = std::max(best, c.score);
    const auto f = static_cast<std::size_t>(tree.feature[0]);
    CHECK(split_score(X, y, C, f, tree.threshold[0]) == doctest::Approx(best).epsilon(1e-12));
    // When the optimum is unique the exact split must match.
    std::vector<Candidate> top;
    for (const auto& c : cands)
      if (c.score > best - 1e-9) top.push_back(c);
    if (top.size() == 1) {
      CHECK(f == top[0].f);
      CHECK(tree.threshold[0] == doctest::Approx(top[0].t).epsilon(1e-12));
    }
  }
}

TEST_CASE("cart: pure leaves, depth limit and serialization") {
  const auto b = blobs(10.0, 3);
  const auto full = fit_decision_tree(b.train.X, b.train.y, 3, {}, 0);
  CHECK(accuracy(full, b.train) == 1.0);
  TreeParams shallow;
  shallow.max_depth = 1;
  const auto stump = fit_decision_tree(b.train.X, b.train.y, 3, shallow, 0);
  CHECK(stump.tree().depth() == 1);
  const auto back = DecisionTreeModel::from_record(Record::deserialize(full.to_record().serialize()));
  CHECK(back.predict_proba(b.test.X) == full.predict_proba(b.test.X));
  // Covers add up: every internal node's cover is the sum of its children's.
  const auto& t = full.tree();
  for (std::size_t i = 0; i < t.n_nodes(); ++i)
    if (!t.is_leaf(i))
      CHECK(t.cover[i] == t.cover[static_cast<std::size_t>(t.left[i])] + t.cover[static_cast<std::size_t>(t.right[i])]);
}

TEST_CASE("forests: accuracy, serial reference and round trip") {
  const auto b = blobs(10.0, 4);
  for (auto* fit : {&fit_extra_trees, &fit_random_forest}) {
    ForestParams p;
    p.n_trees = 15;
    const auto model = (*fit)(b.train.X, b.train.y, 3, p, 77);
    CHECK(accuracy(model, b.test) >= 0.99);
    const auto proba = model.predict_proba(b.test.X);
    CHECK(proba == model.predict_proba_serial(b.test.X));
    for (std::size_t i = 0; i < proba.rows(); ++i) {
      double s = 0;
      for (double v : proba.row(i)) s += v;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto again = (*fit)(b.train.X, b.train.y, 3, p, 77);
    CHECK(again.to_record().serialize() == model.to_record().serialize());
    const auto back = load_classifier(Record::deserialize(model.to_record().serialize()));
    CHECK(back->kind() == model.kind());
    CHECK(back->predict_proba(b.test.X) == proba);
  }
}

TEST_CASE("forests: bootstrap weights") {
  const auto w = bootstrap_weights(200, 5);
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == 200.0);
  CHECK(std::count(w.begin(), w.end(), 0.0) > 0);
}

TEST_CASE("extra trees: thresholds stay inside the node range") {
  const auto b = blobs(3.0, 6);
  ForestParams p;
  p.n_trees = 5;
  const auto model = fit_extra_trees(b.train.X, b.train.y, 3, p, 1);
  for (const auto& t : model.trees())
    for (std::size_t i = 0; i < t.n_nodes(); ++i)
      if (!t.is_leaf(i)) {
        CHECK(t.cover[static_cast<std::size_t>(t.left[i])] > 0);
        CHECK(t.cover[static_cast<std::size_t>(t.right[i])] > 0);
      }
}

TEST_CASE("knn: neighbours match brute force") {
  Rng rng(12);
  Matrix X(60, 3);
  std::vector<int> y(60);
  for (std::size_t i = 0; i < 60; ++i) {
    y[i] = static_cast<int>(rng.below(3));
    for (std::size_t j = 0; j < 3; ++j) X(i, j) = static_cast<double>(rng.below(4));  // many ties
  }
  const auto model = fit_knn(X, y, 3, 5);
  for (std::size_t q = 0; q < 20; ++q) {
    std::vector<double> query{rng.uniform(0, 3), static_cast<double>(rng.below(4)), rng.uniform(0, 3)};
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < 60; ++i) {
      double d = 0;
      for (std::size_t j = 0; j < 3; ++j) d += (X(i, j) - query[j]) * (X(i, j) - query[j]);
      all.emplace_back(d, i);
    }
    std::sort(all.begin(), all.end());
    const auto nn = model.neighbors(query);
    REQUIRE(nn.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) CHECK(nn[k] == all[k].second);
  }
  CHECK(model.predict_proba(X) == model.predict_proba_serial(X));
  CHECK_THROWS_AS(fit_knn(X, y, 3, 0), UsageError);
}

TEST_CASE("mlp: analytic gradient matches central differences") {
  Rng rng(31);
  for (int t = 0; t < 5; ++t) {
    const std::size_t d = 2 + rng.below(3), C = 2 + rng.below(3), n = 8;
    const std::vector<std::size_t> sizes{d, 5, 4, C};
    auto params = init_mlp(sizes, 100 + t);
    for (auto& b : params.biases)
      for (auto& v : b) v = 0.1 * rng.normal();
    Matrix X(n, d);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(C));
      for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.normal();
    }
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    auto grad = MlpParameters::zeros_like(params);
    mlp_loss(params, X, y, rows, 1e-2, &grad);
    auto check = [&](std::vector<double>& p, const std::vector<double>& g) {
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double orig = p[k], h = 1e-6;
        p[k] = orig + h;
        const double up = mlp_loss(params, X, y, rows, 1e-2, nullptr);
        p[k] = orig - h;
        const double down = mlp_loss(params, X, y, rows, 1e-2, nullptr);
        p[k] = orig;
        const double numeric = (up - down) / (2 * h);
        CHECK(std::abs(numeric - g[k]) / std::max(std::abs(numeric) + std::abs(g[k]), 1e-7) < 1e-4);
      }
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      check(params.weights[l], grad.weights[l]);
      check(params.biases[l], grad.biases[l]);
    }
  }
}

TEST_CASE("mlp: learns blobs, batch equals single-row, deterministic") {
  const auto b = blobs(10.0, 8);
  MlpParams p;
  p.hidden = {16, 8};
  p.epochs = 30;
  p.batch_size = 32;
  p.learning_rate = 1e-2;
  const auto model = fit_mlp(b.train.X, b.train.y, 3, p, 5);
  CHECK(accuracy(model, b.test) >= 0.99);
  CHECK(model.loss_history().back() < model.loss_history().front());
  const auto batch = model.predict_proba(b.test.X);
  for (std::size_t i = 0; i < b.test.n_rows(); ++i) {
    const Matrix one(1, 4, std::vector<double>(b.test.X.row(i).begin(), b.test.X.row(i).end()));
    const auto single = model.predict_proba(one);
    for (std::size_t c = 0; c < 3; ++c) CHECK(single(0, c) == batch(i, c));
  }
  const auto again = fit_mlp(b.train.X, b.train.y, 3, p, 5);
  CHECK(again.to_record().serialize() == model.to_record().serialize());
  const auto back = MlpModel::from_record(Record::deserialize(model.to_record().serialize()));
  CHECK(back.predict_proba(b.test.X) == batch);
}

TEST_CASE("gbdt: binning agrees with thresholds") {
  Rng rng(4);
  Matrix X(500, 2);
  for (std::size_t i = 0; i < 500; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = static_cast<double>(rng.below(5));
  }
  const auto m = BinMapper::fit(X, 32);
  CHECK(m.n_bins(0) <= 32);
  CHECK(m.n_bins(1) == 5);
  for (std::size_t f = 0; f < 2; ++f) {
    const auto& thr = m.thresholds(f);
    for (std::size_t i = 0; i < 500; ++i) {
      const auto b = m.bin(f, X(i, f));
      if (b < thr.size()) CHECK(X(i, f) <= thr[b]);
      if (b > 0) CHECK(X(i, f) > thr[b - 1]);
    }
  }
}

TEST_CASE("gbdt: histograms parallel equals serial") {
  Rng rng(41);
  const std::size_t n = 400;
  Matrix X(n, 5);
  std::vector<double> g(n), h(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 5; ++j) X(i, j) = rng.normal();
    g[i] = rng.normal();
    h[i] = rng.uniform();
  }
  const auto m = BinMapper::fit(X, 64);
  const auto bins = m.transform(X);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; i += 3) rows.push_back(i);
  std::vector<std::vector<HistBin>> a, b;
  build_histograms(bins, n, m, rows, g, h, a);
  build_histograms_serial(bins, n, m, rows, g, h, b);
  REQUIRE(a.size() == b.size());
  for (std::size_t f = 0; f < a.size(); ++f)
    for (std::size_t k = 0; k < a[f].size(); ++k) {
      CHECK(a[f][k].g == b[f][k].g);
      CHECK(a[f][k].h == b[f][k].h);
      CHECK(a[f][k].n == b[f][k].n);
    }
}

TEST_CASE("gbdt: training loss never increases") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto b = blobs(2.0, seed);
    GbdtParams p;
    p.n_rounds = 30;
    const auto model = fit_gbdt(b.train.X, b.train.y, 3, p, seed);
    const auto& loss = model.train_loss();
    REQUIRE(loss.size() == 31);
    for (std::size_t r = 1; r < loss.size(); ++r) CHECK(loss[r] <= loss[r - 1] + 1e-12);
    // The recorded loss is the model's own training log-loss.
    CHECK(log_loss(model.predict_proba(b.train.X), b.train.y) == doctest::Approx(loss.back()).epsilon(1e-9));
  }
}

TEST_CASE("gbdt: leaf-wise growth limits and round trip") {
  const auto b = blobs(10.0, 9);
  GbdtParams p;
  p.n_rounds = 20;
  p.max_leaves = 4;
  const auto model = fit_gbdt(b.train.X, b.train.y, 3, p, 2);
  CHECK(model.n_rounds() == 20);
  for (const auto& t : model.trees()) CHECK(t.n_leaves() <= 4);
  CHECK(accuracy(model, b.test) >= 0.99);
  const auto back = GbdtModel::from_record(Record::deserialize(model.to_record().serialize()));
  CHECK(back.predict_proba(b.test.X) == model.predict_proba(b.test.X));
  CHECK(model.predict_margin(b.test.X, 0)(0, 0) == model.base_score()[0]);
}

TEST_CASE("registry: every baseline fits the blobs") {
  const auto b = blobs(10.0, 10);
  LearnerConfig cfg;
  cfg.extra_trees.n_trees = 20;
  cfg.random_forest.n_trees = 20;
  cfg.mlp.hidden = {16};
  cfg.mlp.epochs = 40;
  cfg.mlp.batch_size = 32;
  cfg.mlp.learning_rate = 1e-2;
  cfg.gbdt.n_rounds = 30;
  for (const auto& name : baseline_names()) {
    const auto spec = make_baseline(name, cfg);
    const auto model = spec.fit(b.train.X, b.train.y, 3, 1);
    CAPTURE(name);
    CHECK(model->kind() == name);
    CHECK(accuracy(*model, b.test) >= 0.99);
    CHECK_THROWS_AS(model->predict_proba(Matrix(2, 7)), DataError);
  }
  try {
    make_baseline("svm", cfg);
    FAIL("expected an error");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("random_forest") != std::string::npos);
  }
}

TEST_CASE("registry: config JSON is strict and round-trips") {
  auto j = LearnerConfig{}.to_json();
  j["gbdt"]["n_rounds"] = 12;
  const auto cfg = LearnerConfig::from_json(j);
  CHECK(cfg.gbdt.n_rounds == 12);
  CHECK(cfg.to_json() == j);
  CHECK_THROWS_AS(LearnerConfig::from_json({{"gbdt", {{"rounds", 3}}}}), UsageError);
  CHECK_THROWS_AS(LearnerConfig::from_json({{"svm", {}}}), UsageError);
}
