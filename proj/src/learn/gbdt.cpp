#include "sdnguard/learn/gbdt.hpp"

#include <algorithm>
#include <cmath>

#include "sdnguard/errors.hpp"

namespace sdnguard::learn {

namespace {

double midpoint(double lo, double hi) {
  const double m = lo + (hi - lo) / 2.0;
  return m < hi ? m : lo;
}

}  // namespace

BinMapper BinMapper::fit(const Matrix& X, std::size_t max_bins) {
  if (max_bins < 2 || max_bins > 256) throw UsageError("max_bins must lie in [2, 256]");
  BinMapper m;
  m.thresholds_.resize(X.cols());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    auto col = X.column(j);
    std::sort(col.begin(), col.end());
    std::vector<double> distinct;
    for (double v : col)
      if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
    auto& th = m.thresholds_[j];
    if (distinct.size() <= max_bins) {
      for (std::size_t i = 0; i + 1 < distinct.size(); ++i) th.push_back(midpoint(distinct[i], distinct[i + 1]));
      continue;
    }
    // Cut after the value at each quantile position, between it and the next
    // distinct value, so heavy ties never straddle a bin edge.
    const std::size_t n = col.size();
    for (std::size_t q = 1; q < max_bins; ++q) {
      const double v = col[q * n / max_bins];
      auto next = std::upper_bound(distinct.begin(), distinct.end(), v);
      if (next == distinct.end()) break;
      const double t = midpoint(v, *next);
      if (th.empty() || t > th.back()) th.push_back(t);
    }
  }
  return m;
}

std::uint8_t BinMapper::bin(std::size_t feature, double x) const {
  const auto& th = thresholds_[feature];
  return static_cast<std::uint8_t>(std::lower_bound(th.begin(), th.end(), x) - th.begin());
}

std::vector<std::uint8_t> BinMapper::transform(const Matrix& X) const {
  const std::size_t n = X.rows();
  std::vector<std::uint8_t> out(n * X.cols());
  for (std::size_t j = 0; j < X.cols(); ++j)
    for (std::size_t i = 0; i < n; ++i) out[j * n + i] = bin(j, X(i, j));
  return out;
}

namespace {

void fill_feature(std::span<const std::uint8_t> bins, std::size_t n_rows, std::size_t j,
                  std::span<const std::size_t> rows, std::span<const double> grad, std::span<const double> hess,
                  std::vector<HistBin>& h) {
  std::fill(h.begin(), h.end(), HistBin{});
  const std::uint8_t* col = bins.data() + j * n_rows;
  for (auto r : rows) {
    auto& b = h[col[r]];
    b.g += grad[r];
    b.h += hess[r];
    ++b.n;
  }
}

}  // namespace

void build_histograms(std::span<const std::uint8_t> bins, std::size_t n_rows, const BinMapper& mapper,
                      std::span<const std::size_t> rows, std::span<const double> grad,
                      std::span<const double> hess, std::vector<std::vector<HistBin>>& hist) {
  const auto d = static_cast<std::ptrdiff_t>(hist.size());
  for (std::size_t j = 0; j < hist.size(); ++j) hist[j].resize(mapper.n_bins(j));
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < d; ++j)
    fill_feature(bins, n_rows, static_cast<std::size_t>(j), rows, grad, hess, hist[static_cast<std::size_t>(j)]);
}

void build_histograms_serial(std::span<const std::uint8_t> bins, std::size_t n_rows, const BinMapper& mapper,
                             std::span<const std::size_t> rows, std::span<const double> grad,
                             std::span<const double> hess, std::vector<std::vector<HistBin>>& hist) {
  for (std::size_t j = 0; j < hist.size(); ++j) {
    hist[j].resize(mapper.n_bins(j));
    fill_feature(bins, n_rows, j, rows, grad, hess, hist[j]);
  }
}

void softmax_inplace(std::span<double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (auto& v : row) {
    v = std::exp(v - mx);
    s += v;
  }
  for (auto& v : row) v /= s;
}

double log_loss(const Matrix& proba, std::span<const int> y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    loss -= std::log(std::max(proba(i, static_cast<std::size_t>(y[i])), 1e-300));
  return loss / static_cast<double>(y.size());
}

GbdtModel::GbdtModel(std::size_t n_features, std::vector<double> base_score, std::vector<Tree> trees,
                     GbdtParams params, std::uint64_t seed)
    : n_features_(n_features),
      base_score_(std::move(base_score)),
      trees_(std::move(trees)),
      params_(params),
      seed_(seed) {
  if (base_score_.empty()) throw DataError("gbdt needs at least one class");
  if (trees_.size() % base_score_.size() != 0) throw DataError("gbdt tree count is not a multiple of C");
}

Matrix GbdtModel::predict_margin(const Matrix& X, std::size_t rounds) const {
  check_width(X);
  const std::size_t C = n_classes();
  rounds = std::min(rounds, n_rounds());
  Matrix out(X.rows(), C);
  const auto n = static_cast<std::ptrdiff_t>(X.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto x = X.row(static_cast<std::size_t>(i));
    auto dst = out.row(static_cast<std::size_t>(i));
    std::copy(base_score_.begin(), base_score_.end(), dst.begin());
    for (std::size_t r = 0; r < rounds; ++r)
      for (std::size_t c = 0; c < C; ++c) dst[c] += tree(r, c).predict(x)[0];
  }
  return out;
}

Matrix GbdtModel::predict_proba(const Matrix& X) const {
  Matrix m = predict_margin(X);
  for (std::size_t i = 0; i < m.rows(); ++i) softmax_inplace(m.row(i));
  return m;
}

Record GbdtModel::to_record() const {
  Record r("gbdt");
  r.put_int("n_features", static_cast<std::int64_t>(n_features_));
  r.put_int("seed", static_cast<std::int64_t>(seed_));
  r.put("base_score", base_score_);
  r.put("params", std::vector<double>{static_cast<double>(params_.n_rounds), params_.learning_rate,
                                      static_cast<double>(params_.max_leaves), static_cast<double>(params_.max_depth),
                                      params_.min_child_weight, params_.lambda,
                                      static_cast<double>(params_.max_bins)});
  r.put_int("n_trees", static_cast<std::int64_t>(trees_.size()));
  for (std::size_t t = 0; t < trees_.size(); ++t) r.put("tree" + std::to_string(t), trees_[t].to_record());
  return r;
}

GbdtModel GbdtModel::from_record(const Record& r) {
  r.expect_type("gbdt");
  const auto& pv = r.reals("params");
  if (pv.size() != 7) throw DataError("bad gbdt parameter block");
  GbdtParams p;
  p.n_rounds = static_cast<std::size_t>(pv[0]);
  p.learning_rate = pv[1];
  p.max_leaves = static_cast<std::size_t>(pv[2]);
  p.max_depth = static_cast<int>(pv[3]);
  p.min_child_weight = pv[4];
  p.lambda = pv[5];
  p.max_bins = static_cast<std::size_t>(pv[6]);
  const auto n_trees = r.integer("n_trees");
  if (n_trees < 0) throw DataError("bad gbdt tree count");
  std::vector<Tree> trees;
  for (std::int64_t t = 0; t < n_trees; ++t) trees.push_back(Tree::from_record(r.child("tree" + std::to_string(t))));
  return GbdtModel(static_cast<std::size_t>(r.integer("n_features")), r.reals("base_score"), std::move(trees), p,
                   static_cast<std::uint64_t>(r.integer("seed")));
}

namespace {

struct LeafSplit {
  bool found = false;
  std::size_t feature = 0;
  std::size_t bin = 0;
  double gain = 0.0;
};

struct OpenLeaf {
  std::size_t node;
  std::vector<std::size_t> rows;
  double g, h;
  int depth;
  LeafSplit split;
};

class RegressionGrower {
 public:
  RegressionGrower(const BinMapper& mapper, std::span<const std::uint8_t> bins, std::size_t n_rows,
                   std::size_t n_features, const GbdtParams& p)
      : mapper_(mapper), bins_(bins), n_rows_(n_rows), p_(p), hist_(n_features) {}

  /// Grows one tree; adds lr * leaf value to margin[row] for every row.
  Tree grow(std::span<const double> grad, std::span<const double> hess, std::span<double> margin) {
    grad_ = grad;
    hess_ = hess;
    Tree tree;
    std::vector<std::size_t> all(n_rows_);
    for (std::size_t i = 0; i < n_rows_; ++i) all[i] = i;
    std::vector<OpenLeaf> open;
    open.push_back(make_leaf(tree, std::move(all), 0));
    std::size_t n_leaves = 1;

    while (n_leaves < p_.max_leaves) {
      std::size_t pick = open.size();
      for (std::size_t i = 0; i < open.size(); ++i) {
        if (!open[i].split.found) continue;
        if (pick == open.size() || open[i].split.gain > open[pick].split.gain ||
            (open[i].split.gain == open[pick].split.gain && open[i].node < open[pick].node))
          pick = i;
      }
      if (pick == open.size()) break;
      OpenLeaf leaf = std::move(open[pick]);
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
      const std::uint8_t* col = bins_.data() + leaf.split.feature * n_rows_;
      std::vector<std::size_t> lrows, rrows;
      for (auto r : leaf.rows) (col[r] <= leaf.split.bin ? lrows : rrows).push_back(r);
      auto l = make_leaf(tree, std::move(lrows), leaf.depth + 1);
      auto r = make_leaf(tree, std::move(rrows), leaf.depth + 1);
      tree.make_split(leaf.node, static_cast<std::int32_t>(leaf.split.feature),
                      mapper_.thresholds(leaf.split.feature)[leaf.split.bin], l.node, r.node);
      open.push_back(std::move(l));
      open.push_back(std::move(r));
      ++n_leaves;
    }
    for (const auto& leaf : open) {
      const double v = tree.node_value(leaf.node)[0];
      for (auto r : leaf.rows) margin[r] += v;
    }
    tree.to_preorder();
    return tree;
  }

 private:
  OpenLeaf make_leaf(Tree& tree, std::vector<std::size_t> rows, int depth) {
    double g = 0.0, h = 0.0;
    for (auto r : rows) {
      g += grad_[r];
      h += hess_[r];
    }
    const double value = -g / (h + p_.lambda) * p_.learning_rate;
    const std::size_t node = tree.add_node(static_cast<double>(rows.size()), std::span<const double>(&value, 1));
    OpenLeaf leaf{node, std::move(rows), g, h, depth, {}};
    if (p_.max_depth < 0 || depth < p_.max_depth) leaf.split = best_split(leaf);
    return leaf;
  }

  LeafSplit best_split(const OpenLeaf& leaf) {
    LeafSplit best;
    if (leaf.rows.size() < 2) return best;
    build_histograms(bins_, n_rows_, mapper_, leaf.rows, grad_, hess_, hist_);
    const double lambda = p_.lambda;
    const double parent = leaf.g * leaf.g / (leaf.h + lambda);
    for (std::size_t j = 0; j < hist_.size(); ++j) {
      const auto& h = hist_[j];
      double gl = 0.0, hl = 0.0;
      std::uint32_t nl = 0;
      for (std::size_t b = 0; b + 1 < h.size(); ++b) {
        gl += h[b].g;
        hl += h[b].h;
        nl += h[b].n;
        const std::size_t nr = leaf.rows.size() - nl;
        if (nl == 0) continue;
        if (nr == 0) break;
        const double gr = leaf.g - gl, hr = leaf.h - hl;
        if (hl < p_.min_child_weight || hr < p_.min_child_weight) continue;
        const double gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
        if (gain > 1e-12 && (!best.found || gain > best.gain)) best = {true, j, b, gain};
      }
    }
    return best;
  }

  const BinMapper& mapper_;
  std::span<const std::uint8_t> bins_;
  std::size_t n_rows_;
  GbdtParams p_;
  std::vector<std::vector<HistBin>> hist_;
  std::span<const double> grad_, hess_;
};

}  // namespace

GbdtModel fit_gbdt(const Matrix& X, std::span<const int> y, std::size_t n_classes, const GbdtParams& params,
                   std::uint64_t seed) {
  const std::size_t n = X.rows(), C = n_classes;
  if (y.size() != n || n == 0) throw DataError("gbdt needs a nonempty labelled matrix");
  if (params.max_leaves < 2) throw UsageError("gbdt max_leaves must be at least 2");
  if (params.lambda < 0.0) throw UsageError("gbdt lambda must be nonnegative");
  std::vector<double> prior(C, 0.0);
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= C) throw DataError("label outside [0, C)");
    prior[static_cast<std::size_t>(label)] += 1.0;
  }
  // Classes absent from training get a vanishing prior rather than -inf.
  std::vector<double> base(C);
  for (std::size_t c = 0; c < C; ++c) base[c] = std::log(std::max(prior[c], 1e-6) / static_cast<double>(n));

  const BinMapper mapper = BinMapper::fit(X, params.max_bins);
  const auto bins = mapper.transform(X);
  RegressionGrower grower(mapper, bins, n, X.cols(), params);

  // margins[c * n + i]
  std::vector<double> margins(C * n);
  for (std::size_t c = 0; c < C; ++c) std::fill_n(margins.begin() + static_cast<std::ptrdiff_t>(c * n), n, base[c]);
  std::vector<double> proba(C * n), grad(n), hess(n);
  auto refresh = [&]() {
    double loss = 0.0;
    std::vector<double> row(C);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < C; ++c) row[c] = margins[c * n + i];
      softmax_inplace(row);
      for (std::size_t c = 0; c < C; ++c) proba[c * n + i] = row[c];
      loss -= std::log(std::max(row[static_cast<std::size_t>(y[i])], 1e-300));
    }
    return loss / static_cast<double>(n);
  };

  std::vector<double> losses{refresh()};
  std::vector<Tree> trees;
  trees.reserve(params.n_rounds * C);
  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = proba[c * n + i];
        grad[i] = p - (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0);
        hess[i] = std::max(p * (1.0 - p), 1e-16);
      }
      trees.push_back(grower.grow(grad, hess, std::span<double>(margins.data() + c * n, n)));
    }
    const double loss = refresh();
    if (!std::isfinite(loss)) throw NumericalError("gbdt training loss became non-finite");
    losses.push_back(loss);
  }
  GbdtModel model(X.cols(), std::move(base), std::move(trees), params, seed);
  model.set_train_loss(std::move(losses));
  return model;
}

}  // namespace sdnguard::learn
