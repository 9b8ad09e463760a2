#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdnguard/learn/classifier.hpp"
#include "sdnguard/learn/forest.hpp"
#include "sdnguard/learn/gbdt.hpp"
#include "sdnguard/learn/mlp.hpp"

namespace sdnguard::learn {

/// Hyperparameters of the six baseline learners.
struct LearnerConfig {
  TreeParams decision_tree;
  ForestParams extra_trees;
  ForestParams random_forest;
  std::size_t knn_k = 5;
  MlpParams mlp;
  GbdtParams gbdt;

  /// Starts from the defaults and overrides whatever keys are present.
  static LearnerConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

GbdtParams gbdt_params_from_json(const nlohmann::json& j, GbdtParams base = {});
nlohmann::json to_json(const GbdtParams& p);

using FitFn =
    std::function<ClassifierPtr(const Matrix& X, std::span<const int> y, std::size_t n_classes, std::uint64_t seed)>;

/// A named way to fit a learner; used by the stack, cross-validation and
/// benchmarking so they can treat every model alike.
struct LearnerSpec {
  std::string name;
  FitFn fit;
};

/// decision_tree, extra_trees, random_forest, knn, mlp, gbdt.
const std::vector<std::string>& baseline_names();

/// Throws UsageError listing the valid names for anything else.
LearnerSpec make_baseline(std::string_view name, const LearnerConfig& cfg);

}  // namespace sdnguard::learn
