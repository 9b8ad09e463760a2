#include "sdnguard/explain/tree_shap.hpp"

#include <algorithm>
#include <cmath>

#include "sdnguard/errors.hpp"
#include "sdnguard/learn/forest.hpp"
#include "sdnguard/learn/gbdt.hpp"

namespace sdnguard::explain {

namespace {

// Path-dependent TreeSHAP (Lundberg et al., Algorithm 2). Each path element
// holds the fraction of cover that flows through when the feature is absent
// (zero) or present (one), and pweight holds the permutation weights.
struct PathElement {
  std::int32_t feature = -1;
  double zero = 0.0;
  double one = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, std::size_t depth, double zero, double one, std::int32_t feature) {
  path[depth] = {feature, zero, one, depth == 0 ? 1.0 : 0.0};
  const double denom = static_cast<double>(depth + 1);
  for (std::size_t k = depth; k-- > 0;) {
    path[k + 1].pweight += one * path[k].pweight * static_cast<double>(k + 1) / denom;
    path[k].pweight = zero * path[k].pweight * static_cast<double>(depth - k) / denom;
  }
}

void unwind_path(PathElement* path, std::size_t depth, std::size_t index) {
  const double one = path[index].one;
  const double zero = path[index].zero;
  const double denom = static_cast<double>(depth + 1);
  double next = path[depth].pweight;
  for (std::size_t k = depth; k-- > 0;) {
    if (one != 0.0) {
      const double tmp = path[k].pweight;
      path[k].pweight = next * denom / (static_cast<double>(k + 1) * one);
      next = tmp - path[k].pweight * zero * static_cast<double>(depth - k) / denom;
    } else {
      path[k].pweight = path[k].pweight * denom / (zero * static_cast<double>(depth - k));
    }
  }
  for (std::size_t k = index; k < depth; ++k) {
    path[k].feature = path[k + 1].feature;
    path[k].zero = path[k + 1].zero;
    path[k].one = path[k + 1].one;
  }
}

double unwound_sum(const PathElement* path, std::size_t depth, std::size_t index) {
  const double one = path[index].one;
  const double zero = path[index].zero;
  const double denom = static_cast<double>(depth + 1);
  double next = path[depth].pweight;
  double total = 0.0;
  for (std::size_t k = depth; k-- > 0;) {
    if (one != 0.0) {
      const double tmp = next * denom / (static_cast<double>(k + 1) * one);
      total += tmp;
      next = path[k].pweight - tmp * zero * static_cast<double>(depth - k) / denom;
    } else {
      total += path[k].pweight / zero / (static_cast<double>(depth - k) / denom);
    }
  }
  return total;
}

struct Walker {
  const learn::Tree& tree;
  std::span<const double> x;
  double scale;
  std::span<double> phi;

  void recurse(std::size_t node, std::size_t depth, PathElement* parent, double zero, double one,
               std::int32_t feature) {
    PathElement* path = parent + depth + 1;
    std::copy(parent, parent + depth + 1, path);
    extend_path(path, depth, zero, one, feature);

    const std::size_t C = tree.n_outputs;
    if (tree.is_leaf(node)) {
      const auto value = tree.node_value(node);
      for (std::size_t k = 1; k <= depth; ++k) {
        const double w = unwound_sum(path, depth, k) * (path[k].one - path[k].zero) * scale;
        double* out = phi.data() + static_cast<std::size_t>(path[k].feature) * C;
        for (std::size_t c = 0; c < C; ++c) out[c] += w * value[c];
      }
      return;
    }

    const std::int32_t split = tree.feature[node];
    const auto l = static_cast<std::size_t>(tree.left[node]);
    const auto r = static_cast<std::size_t>(tree.right[node]);
    const bool go_left = x[static_cast<std::size_t>(split)] <= tree.threshold[node];
    const std::size_t hot = go_left ? l : r;
    const std::size_t cold = go_left ? r : l;
    const double w = tree.cover[node];

    double in_zero = 1.0, in_one = 1.0;
    std::size_t index = 0;
    while (index <= depth && path[index].feature != split) ++index;
    if (index <= depth) {
      in_zero = path[index].zero;
      in_one = path[index].one;
      unwind_path(path, depth, index);
      --depth;
    }
    recurse(hot, depth + 1, path, tree.cover[hot] / w * in_zero, in_one, split);
    recurse(cold, depth + 1, path, tree.cover[cold] / w * in_zero, 0.0, split);
  }
};

void check_covers(const learn::Tree& tree) {
  for (std::size_t node = 0; node < tree.n_nodes(); ++node) {
    if (tree.is_leaf(node)) continue;
    const double w = tree.cover[node];
    const double sum = tree.cover[static_cast<std::size_t>(tree.left[node])] +
                       tree.cover[static_cast<std::size_t>(tree.right[node])];
    if (!(w > 0.0) || std::abs(sum - w) > 1e-9 * w)
      throw DataError("tree is missing consistent node cover counts; refit the model with this version to record them");
  }
}

enum class Kind { kSingle, kForest, kBoosted };

struct TreeSet {
  Kind kind;
  std::vector<const learn::Tree*> trees;
  std::size_t n_outputs = 0;
  std::size_t n_features = 0;
};

TreeSet collect(const learn::Classifier& model) {
  TreeSet set;
  set.n_features = model.n_features();
  set.n_outputs = model.n_classes();
  if (auto* dt = dynamic_cast<const learn::DecisionTreeModel*>(&model)) {
    set.kind = Kind::kSingle;
    set.trees.push_back(&dt->tree());
  } else if (auto* f = dynamic_cast<const learn::ForestModel*>(&model)) {
    set.kind = Kind::kForest;
    for (const auto& t : f->trees()) set.trees.push_back(&t);
  } else if (auto* g = dynamic_cast<const learn::GbdtModel*>(&model)) {
    set.kind = Kind::kBoosted;
    for (const auto& t : g->trees()) set.trees.push_back(&t);
  } else {
    throw UsageError("tree_shap needs a decision tree, forest or gradient boosting model, got " +
                     std::string(model.kind()));
  }
  for (const auto* t : set.trees) check_covers(*t);
  return set;
}

std::size_t path_capacity(const TreeSet& set) {
  std::size_t depth = 0;
  for (const auto* t : set.trees) depth = std::max(depth, t->depth());
  return (depth + 2) * (depth + 3) / 2;
}

// Attributions of one sample, d x C.
void explain_row(const TreeSet& set, std::span<const double> x, std::vector<PathElement>& scratch,
                 std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t C = set.n_outputs;
  if (set.kind == Kind::kBoosted) {
    std::vector<double> tmp(set.n_features);
    for (std::size_t t = 0; t < set.trees.size(); ++t) {
      const std::size_t cls = t % C;
      const auto& tree = *set.trees[t];
      if (tree.is_leaf(0)) continue;
      std::fill(tmp.begin(), tmp.end(), 0.0);
      Walker w{tree, x, 1.0, tmp};
      w.recurse(0, 0, scratch.data(), 1.0, 1.0, -1);
      for (std::size_t j = 0; j < set.n_features; ++j) out[j * C + cls] += tmp[j];
    }
    return;
  }
  const double scale = set.kind == Kind::kForest ? 1.0 / static_cast<double>(set.trees.size()) : 1.0;
  for (const auto* t : set.trees) {
    if (t->is_leaf(0)) continue;
    Walker w{*t, x, scale, out};
    w.recurse(0, 0, scratch.data(), 1.0, 1.0, -1);
  }
}

ShapAttribution run(const learn::Classifier& model, const Matrix& X, bool parallel) {
  if (X.cols() != model.n_features()) throw DataError("explained rows have the wrong number of features");
  const TreeSet set = collect(model);
  const std::size_t n = X.rows(), d = set.n_features, C = set.n_outputs;

  ShapAttribution a;
  a.n_samples = n;
  a.n_features = d;
  a.n_outputs = C;
  a.values.assign(n * d * C, 0.0);
  a.base_values.assign(C, 0.0);
  if (set.kind == Kind::kBoosted) {
    const auto& g = dynamic_cast<const learn::GbdtModel&>(model);
    a.base_values = g.base_score();
    for (std::size_t t = 0; t < set.trees.size(); ++t) a.base_values[t % C] += tree_expected_value(*set.trees[t])[0];
    a.outputs = g.predict_margin(X);
  } else {
    const double scale = set.kind == Kind::kForest ? 1.0 / static_cast<double>(set.trees.size()) : 1.0;
    for (const auto* t : set.trees) {
      const auto e = tree_expected_value(*t);
      for (std::size_t c = 0; c < C; ++c) a.base_values[c] += scale * e[c];
    }
    a.outputs = model.predict_proba(X);
  }

  const std::size_t cap = path_capacity(set);
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel if (parallel)
  {
    std::vector<PathElement> scratch(cap);
#pragma omp for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < nn; ++i) {
      const auto r = static_cast<std::size_t>(i);
      explain_row(set, X.row(r), scratch, std::span<double>(a.values.data() + r * d * C, d * C));
    }
  }
  a.check_local_accuracy(1e-6);
  return a;
}

}  // namespace

std::vector<double> tree_expected_value(const learn::Tree& tree) {
  const std::size_t C = tree.n_outputs;
  std::vector<double> e(C, 0.0);
  if (tree.n_nodes() == 0) return e;
  if (tree.is_leaf(0)) {
    auto v = tree.node_value(0);
    return {v.begin(), v.end()};
  }
  const double root = tree.cover[0];
  for (std::size_t node = 0; node < tree.n_nodes(); ++node) {
    if (!tree.is_leaf(node)) continue;
    const double w = tree.cover[node] / root;
    const auto v = tree.node_value(node);
    for (std::size_t c = 0; c < C; ++c) e[c] += w * v[c];
  }
  return e;
}

void tree_shap_row(const learn::Tree& tree, std::span<const double> x, double scale, std::span<double> phi) {
  if (tree.n_nodes() == 0 || tree.is_leaf(0)) return;
  check_covers(tree);
  const std::size_t depth = tree.depth();
  std::vector<PathElement> scratch((depth + 2) * (depth + 3) / 2);
  Walker w{tree, x, scale, phi};
  w.recurse(0, 0, scratch.data(), 1.0, 1.0, -1);
}

ShapAttribution tree_shap(const learn::Classifier& model, const Matrix& X) { return run(model, X, true); }

ShapAttribution tree_shap_serial(const learn::Classifier& model, const Matrix& X) { return run(model, X, false); }

}  // namespace sdnguard::explain
