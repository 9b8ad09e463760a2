#include "sdnguard/learn/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdnguard/errors.hpp"
#include "sdnguard/rng.hpp"

namespace sdnguard::learn {

namespace {

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = 0.0;  // sum_c wL_c^2 / wL + sum_c wR_c^2 / wR, larger is better
};

bool better(const SplitChoice& best, double score, std::size_t feature) {
  if (!best.found) return true;
  const double tol = 1e-12 * std::max(1.0, std::fabs(best.score));
  if (score > best.score + tol) return true;
  return std::fabs(score - best.score) <= tol && feature < best.feature;
}

class GiniGrower {
 public:
  GiniGrower(const Matrix& X, std::span<const int> y, std::span<const double> w, std::size_t n_classes,
             const TreeParams& params, std::uint64_t seed)
      : X_(X), y_(y), w_(w), C_(n_classes), params_(params), rng_(seed) {
    tree_.n_outputs = C_;
    const std::size_t d = X.cols();
    max_features_ = params.max_features == 0 ? d : std::min(params.max_features, d);
    feature_order_.resize(d);
    std::iota(feature_order_.begin(), feature_order_.end(), 0);
    left_counts_.resize(C_);
    right_counts_.resize(C_);
  }

  Tree grow(std::vector<std::size_t> rows) {
    double total = 0.0;
    for (auto r : rows) total += w_[r];
    root_weight_ = total;
    if (rows.empty() || total <= 0.0) {
      std::vector<double> uniform(C_, 1.0 / static_cast<double>(C_));
      tree_.add_node(0.0, uniform);
      return std::move(tree_);
    }
    rows_ = std::move(rows);
    build(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  std::size_t build(std::size_t begin, std::size_t end, int depth) {
    std::vector<double> counts(C_, 0.0);
    double weight = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      counts[static_cast<std::size_t>(y_[rows_[i]])] += w_[rows_[i]];
      weight += w_[rows_[i]];
    }
    std::vector<double> dist(C_);
    double sumsq = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < C_; ++c) {
      dist[c] = counts[c] / weight;
      sumsq += counts[c] * counts[c];
      present += counts[c] > 0.0;
    }
    const std::size_t node = tree_.add_node(weight, dist);

    if (present <= 1) return node;
    if (params_.max_depth >= 0 && depth >= params_.max_depth) return node;
    if (end - begin < std::max<std::size_t>(params_.min_samples_split, 2)) return node;

    const SplitChoice split = find_split(begin, end, counts, weight);
    if (!split.found) return node;
    const double decrease = (split.score - sumsq / weight) / root_weight_;
    if (decrease < params_.min_impurity_decrease - 1e-12) return node;

    auto mid = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                              rows_.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](std::size_t r) { return X_(r, split.feature) <= split.threshold; });
    const auto mid_index = static_cast<std::size_t>(mid - rows_.begin());
    if (mid_index == begin || mid_index == end) return node;
    const std::size_t l = build(begin, mid_index, depth + 1);
    const std::size_t r = build(mid_index, end, depth + 1);
    tree_.make_split(node, static_cast<std::int32_t>(split.feature), split.threshold, l, r);
    return node;
  }

  SplitChoice find_split(std::size_t begin, std::size_t end, const std::vector<double>& counts, double weight) {
    SplitChoice best;
    const std::size_t d = feature_order_.size();
    const bool sample = max_features_ < d || params_.random_thresholds;
    std::size_t visited = 0;
    for (std::size_t k = 0; k < d && visited < max_features_; ++k) {
      if (sample) std::swap(feature_order_[k], feature_order_[k + rng_.below(d - k)]);
      const std::size_t f = sample ? feature_order_[k] : k;
      const bool usable = params_.random_thresholds ? eval_random(f, begin, end, counts, weight, best)
                                                    : eval_exact(f, begin, end, counts, weight, best);
      visited += usable;
    }
    return best;
  }

  bool eval_exact(std::size_t f, std::size_t begin, std::size_t end, const std::vector<double>& counts,
                  double weight, SplitChoice& best) {
    scratch_.clear();
    for (std::size_t i = begin; i < end; ++i) scratch_.emplace_back(X_(rows_[i], f), rows_[i]);
    std::sort(scratch_.begin(), scratch_.end());
    if (scratch_.front().first == scratch_.back().first) return false;

    std::fill(left_counts_.begin(), left_counts_.end(), 0.0);
    right_counts_ = counts;
    double wl = 0.0, wr = weight;
    double sql = 0.0, sqr = 0.0;
    for (double c : counts) sqr += c * c;
    for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
      const auto row = scratch_[i].second;
      const auto c = static_cast<std::size_t>(y_[row]);
      const double w = w_[row];
      sql += w * (2.0 * left_counts_[c] + w);
      sqr += w * (w - 2.0 * right_counts_[c]);
      left_counts_[c] += w;
      right_counts_[c] -= w;
      wl += w;
      wr -= w;
      const double lo = scratch_[i].first, hi = scratch_[i + 1].first;
      if (lo == hi) continue;
      const double score = sql / wl + sqr / wr;
      if (better(best, score, f)) {
        double thr = lo + (hi - lo) / 2.0;
        if (!(thr < hi)) thr = lo;
        best = {true, f, thr, score};
      }
    }
    return true;
  }

  bool eval_random(std::size_t f, std::size_t begin, std::size_t end, const std::vector<double>& counts,
                   double weight, SplitChoice& best) {
    double lo = X_(rows_[begin], f), hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double v = X_(rows_[i], f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo == hi) return false;
    double thr = rng_.uniform(lo, hi);
    if (!(thr < hi)) thr = lo;
    std::fill(left_counts_.begin(), left_counts_.end(), 0.0);
    double wl = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = rows_[i];
      if (X_(row, f) <= thr) {
        left_counts_[static_cast<std::size_t>(y_[row])] += w_[row];
        wl += w_[row];
      }
    }
    const double wr = weight - wl;
    double sql = 0.0, sqr = 0.0;
    for (std::size_t c = 0; c < C_; ++c) {
      const double r = counts[c] - left_counts_[c];
      sql += left_counts_[c] * left_counts_[c];
      sqr += r * r;
    }
    if (wl <= 0.0 || wr <= 0.0) return true;
    const double score = sql / wl + sqr / wr;
    if (better(best, score, f)) best = {true, f, thr, score};
    return true;
  }

  const Matrix& X_;
  std::span<const int> y_;
  std::span<const double> w_;
  std::size_t C_;
  TreeParams params_;
  Rng rng_;
  Tree tree_;
  std::size_t max_features_ = 0;
  double root_weight_ = 0.0;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> feature_order_;
  std::vector<std::pair<double, std::size_t>> scratch_;
  std::vector<double> left_counts_, right_counts_;
};

void check_fit_inputs(const Matrix& X, std::span<const int> y, std::size_t n_classes) {
  if (y.size() != X.rows()) throw DataError("label count does not match row count");
  if (n_classes < 1) throw DataError("at least one class is required");
  for (int label : y)
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) throw DataError("label outside [0, C)");
}

std::size_t default_subsample(std::size_t d) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
}

Record tree_params_record(const TreeParams& p) {
  Record r("tree_params");
  r.put_int("max_depth", p.max_depth);
  r.put_int("min_samples_split", static_cast<std::int64_t>(p.min_samples_split));
  r.put_real("min_impurity_decrease", p.min_impurity_decrease);
  r.put_int("max_features", static_cast<std::int64_t>(p.max_features));
  r.put_int("random_thresholds", p.random_thresholds ? 1 : 0);
  return r;
}

TreeParams tree_params_from(const Record& r) {
  TreeParams p;
  p.max_depth = static_cast<int>(r.integer("max_depth"));
  p.min_samples_split = static_cast<std::size_t>(r.integer("min_samples_split"));
  p.min_impurity_decrease = r.real("min_impurity_decrease");
  p.max_features = static_cast<std::size_t>(r.integer("max_features"));
  p.random_thresholds = r.integer("random_thresholds") != 0;
  return p;
}

}  // namespace

Tree grow_classification_tree(const Matrix& X, std::span<const int> y, std::span<const double> weights,
                              std::size_t n_classes, const TreeParams& params, std::uint64_t seed) {
  check_fit_inputs(X, y, n_classes);
  if (weights.size() != X.rows()) throw DataError("weight count does not match row count");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < X.rows(); ++i)
    if (weights[i] > 0.0) rows.push_back(i);
  GiniGrower grower(X, y, weights, n_classes, params, seed);
  return grower.grow(std::move(rows));
}

Matrix DecisionTreeModel::predict_proba(const Matrix& X) const {
  check_width(X);
  Matrix out(X.rows(), tree_.n_outputs);
  const auto n = static_cast<std::ptrdiff_t>(X.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto v = tree_.predict(X.row(static_cast<std::size_t>(i)));
    std::copy(v.begin(), v.end(), out.row(static_cast<std::size_t>(i)).begin());
  }
  return out;
}

Record DecisionTreeModel::to_record() const {
  Record r("decision_tree");
  r.put_int("n_features", static_cast<std::int64_t>(n_features_));
  r.put_int("seed", static_cast<std::int64_t>(seed_));
  r.put("params", tree_params_record(params_));
  r.put("tree", tree_.to_record());
  return r;
}

DecisionTreeModel DecisionTreeModel::from_record(const Record& r) {
  r.expect_type("decision_tree");
  return DecisionTreeModel(Tree::from_record(r.child("tree")), static_cast<std::size_t>(r.integer("n_features")),
                           tree_params_from(r.child("params")), static_cast<std::uint64_t>(r.integer("seed")));
}

DecisionTreeModel fit_decision_tree(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                                    const TreeParams& params, std::uint64_t seed) {
  std::vector<double> ones(X.rows(), 1.0);
  return DecisionTreeModel(grow_classification_tree(X, y, ones, n_classes, params, seed), X.cols(), params, seed);
}

std::size_t ForestModel::n_classes() const { return trees_.empty() ? 0 : trees_.front().n_outputs; }

std::uint64_t ForestModel::tree_seed(std::size_t t) const { return derive_seed(seed_, t); }

Matrix ForestModel::predict_proba(const Matrix& X) const {
  check_width(X);
  const std::size_t C = n_classes();
  Matrix out(X.rows(), C);
  const double inv = 1.0 / static_cast<double>(trees_.size());
  const auto n = static_cast<std::ptrdiff_t>(X.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto x = X.row(static_cast<std::size_t>(i));
    auto dst = out.row(static_cast<std::size_t>(i));
    for (const auto& t : trees_) {
      auto v = t.predict(x);
      for (std::size_t c = 0; c < C; ++c) dst[c] += v[c];
    }
    for (auto& p : dst) p *= inv;
  }
  return out;
}

Matrix ForestModel::predict_proba_serial(const Matrix& X) const {
  check_width(X);
  const std::size_t C = n_classes();
  Matrix out(X.rows(), C);
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    auto dst = out.row(i);
    for (const auto& t : trees_) {
      auto v = t.predict(X.row(i));
      for (std::size_t c = 0; c < C; ++c) dst[c] += v[c];
    }
    for (auto& p : dst) p *= inv;
  }
  return out;
}

Record ForestModel::to_record() const {
  Record r{std::string(kind())};
  r.put_int("n_features", static_cast<std::int64_t>(n_features_));
  r.put_int("seed", static_cast<std::int64_t>(seed_));
  r.put_int("n_trees", static_cast<std::int64_t>(params_.n_trees));
  r.put_int("max_depth", params_.max_depth);
  r.put_int("min_samples_split", static_cast<std::int64_t>(params_.min_samples_split));
  r.put_int("feature_subsample", static_cast<std::int64_t>(params_.feature_subsample));
  for (std::size_t t = 0; t < trees_.size(); ++t) r.put("tree" + std::to_string(t), trees_[t].to_record());
  return r;
}

ForestModel ForestModel::from_record(const Record& r) {
  Mode mode;
  if (r.type() == "random_forest") mode = Mode::kBagged;
  else if (r.type() == "extra_trees") mode = Mode::kExtra;
  else throw DataError("not a forest record: " + r.type());
  ForestParams p;
  p.n_trees = static_cast<std::size_t>(r.integer("n_trees"));
  p.max_depth = static_cast<int>(r.integer("max_depth"));
  p.min_samples_split = static_cast<std::size_t>(r.integer("min_samples_split"));
  p.feature_subsample = static_cast<std::size_t>(r.integer("feature_subsample"));
  if (p.n_trees == 0) throw DataError("forest record holds no trees");
  std::vector<Tree> trees;
  for (std::size_t t = 0; t < p.n_trees; ++t) trees.push_back(Tree::from_record(r.child("tree" + std::to_string(t))));
  return ForestModel(mode, std::move(trees), static_cast<std::size_t>(r.integer("n_features")), p,
                     static_cast<std::uint64_t>(r.integer("seed")));
}

std::vector<double> bootstrap_weights(std::size_t n, std::uint64_t tree_seed) {
  std::vector<double> w(n, 0.0);
  Rng rng(derive_seed(tree_seed, "bootstrap"));
  for (std::size_t i = 0; i < n; ++i) w[rng.below(n)] += 1.0;
  return w;
}

namespace {

ForestModel fit_forest(ForestModel::Mode mode, const Matrix& X, std::span<const int> y, std::size_t n_classes,
                       const ForestParams& params, std::uint64_t seed) {
  check_fit_inputs(X, y, n_classes);
  if (params.n_trees == 0) throw UsageError("a forest needs at least one tree");
  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_samples_split = params.min_samples_split;
  tp.max_features = params.feature_subsample == 0 ? default_subsample(X.cols()) : params.feature_subsample;
  tp.random_thresholds = mode == ForestModel::Mode::kExtra;

  std::vector<Tree> trees(params.n_trees);
  const auto n_trees = static_cast<std::ptrdiff_t>(params.n_trees);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < n_trees; ++t) {
    const std::uint64_t tree_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
    const auto weights = mode == ForestModel::Mode::kBagged ? bootstrap_weights(X.rows(), tree_seed)
                                                            : std::vector<double>(X.rows(), 1.0);
    trees[static_cast<std::size_t>(t)] =
        grow_classification_tree(X, y, weights, n_classes, tp, derive_seed(tree_seed, "split"));
  }
  return ForestModel(mode, std::move(trees), X.cols(), params, seed);
}

}  // namespace

ForestModel fit_extra_trees(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                            const ForestParams& params, std::uint64_t seed) {
  return fit_forest(ForestModel::Mode::kExtra, X, y, n_classes, params, seed);
}

ForestModel fit_random_forest(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                              const ForestParams& params, std::uint64_t seed) {
  return fit_forest(ForestModel::Mode::kBagged, X, y, n_classes, params, seed);
}

}  // namespace sdnguard::learn
