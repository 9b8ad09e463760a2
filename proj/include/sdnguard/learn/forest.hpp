#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdnguard/learn/classifier.hpp"
#include "sdnguard/learn/tree.hpp"

namespace sdnguard::learn {

struct TreeParams {
  int max_depth = -1;  // -1 = unlimited
  std::size_t min_samples_split = 2;
  double min_impurity_decrease = 0.0;
  /// Candidate features per node; 0 means all.
  std::size_t max_features = 0;
  /// Extra-trees mode: one uniform threshold per candidate feature.
  bool random_thresholds = false;
};

/// Grows one Gini tree. `weights` holds per-row multiplicities (bootstrap
/// counts); rows with weight 0 are ignored. Leaves store class
/// distributions, covers store weighted counts.
Tree grow_classification_tree(const Matrix& X, std::span<const int> y, std::span<const double> weights,
                              std::size_t n_classes, const TreeParams& params, std::uint64_t seed);

class DecisionTreeModel final : public Classifier {
 public:
  DecisionTreeModel(Tree tree, std::size_t n_features, TreeParams params, std::uint64_t seed)
      : tree_(std::move(tree)), n_features_(n_features), params_(params), seed_(seed) {}

  std::string_view kind() const override { return "decision_tree"; }
  std::size_t n_classes() const override { return tree_.n_outputs; }
  std::size_t n_features() const override { return n_features_; }
  Matrix predict_proba(const Matrix& X) const override;
  Record to_record() const override;
  static DecisionTreeModel from_record(const Record& r);

  const Tree& tree() const { return tree_; }
  const TreeParams& params() const { return params_; }

 private:
  Tree tree_;
  std::size_t n_features_;
  TreeParams params_;
  std::uint64_t seed_;
};

DecisionTreeModel fit_decision_tree(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                                    const TreeParams& params, std::uint64_t seed);

struct ForestParams {
  std::size_t n_trees = 100;
  int max_depth = -1;
  std::size_t min_samples_split = 2;
  /// Candidate features per node; 0 means ceil(sqrt(d)).
  std::size_t feature_subsample = 0;
};

class ForestModel final : public Classifier {
 public:
  enum class Mode { kBagged, kExtra };

  ForestModel(Mode mode, std::vector<Tree> trees, std::size_t n_features, ForestParams params,
              std::uint64_t seed)
      : mode_(mode), trees_(std::move(trees)), n_features_(n_features), params_(params), seed_(seed) {}

  std::string_view kind() const override { return mode_ == Mode::kBagged ? "random_forest" : "extra_trees"; }
  std::size_t n_classes() const override;
  std::size_t n_features() const override { return n_features_; }

  /// Mean of member leaf distributions; rows evaluated in parallel.
  Matrix predict_proba(const Matrix& X) const override;
  Matrix predict_proba_serial(const Matrix& X) const;

  Record to_record() const override;
  static ForestModel from_record(const Record& r);

  Mode mode() const { return mode_; }
  const std::vector<Tree>& trees() const { return trees_; }
  std::uint64_t tree_seed(std::size_t t) const;

 private:
  Mode mode_;
  std::vector<Tree> trees_;
  std::size_t n_features_;
  ForestParams params_;
  std::uint64_t seed_;
};

/// Full sample per tree, random thresholds.
ForestModel fit_extra_trees(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                            const ForestParams& params, std::uint64_t seed);

/// Bootstrap per tree, exact best split within a random feature subset.
ForestModel fit_random_forest(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                              const ForestParams& params, std::uint64_t seed);

/// Bootstrap multiplicities drawn for tree t of a random forest.
std::vector<double> bootstrap_weights(std::size_t n, std::uint64_t tree_seed);

}  // namespace sdnguard::learn
