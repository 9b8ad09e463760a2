#include "sdnguard/learn/registry.hpp"

#include <algorithm>
#include <set>

#include "sdnguard/errors.hpp"
#include "sdnguard/learn/knn.hpp"

namespace sdnguard::learn {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw UsageError("config section '" + std::string(section) + "' must be an object");
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw UsageError("unknown key '" + key + "' in config section '" + std::string(section) + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config key '") + key + "' has the wrong type");
  }
}

ForestParams forest_from_json(const json& j, std::string_view section, ForestParams p) {
  check_keys(j, section, {"n_trees", "max_depth", "min_samples_split", "feature_subsample"});
  read(j, "n_trees", p.n_trees);
  read(j, "max_depth", p.max_depth);
  read(j, "min_samples_split", p.min_samples_split);
  read(j, "feature_subsample", p.feature_subsample);
  if (p.n_trees == 0) throw UsageError(std::string(section) + ".n_trees must be positive");
  return p;
}

json forest_to_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.max_depth},
          {"min_samples_split", p.min_samples_split},
          {"feature_subsample", p.feature_subsample}};
}

}  // namespace

GbdtParams gbdt_params_from_json(const json& j, GbdtParams p) {
  check_keys(j, "gbdt",
             {"n_rounds", "learning_rate", "max_leaves", "max_depth", "min_child_weight", "lambda", "max_bins"});
  read(j, "n_rounds", p.n_rounds);
  read(j, "learning_rate", p.learning_rate);
  read(j, "max_leaves", p.max_leaves);
  read(j, "max_depth", p.max_depth);
  read(j, "min_child_weight", p.min_child_weight);
  read(j, "lambda", p.lambda);
  read(j, "max_bins", p.max_bins);
  if (!(p.learning_rate > 0.0)) throw UsageError("gbdt.learning_rate must be positive");
  if (p.max_leaves < 2) throw UsageError("gbdt.max_leaves must be at least 2");
  if (p.lambda < 0.0) throw UsageError("gbdt.lambda must be nonnegative");
  if (p.max_bins < 2 || p.max_bins > 256) throw UsageError("gbdt.max_bins must lie in [2, 256]");
  return p;
}

json to_json(const GbdtParams& p) {
  return {{"n_rounds", p.n_rounds},         {"learning_rate", p.learning_rate},
          {"max_leaves", p.max_leaves},     {"max_depth", p.max_depth},
          {"min_child_weight", p.min_child_weight}, {"lambda", p.lambda},
          {"max_bins", p.max_bins}};
}

LearnerConfig LearnerConfig::from_json(const json& j) {
  LearnerConfig c;
  if (j.is_null()) return c;
  check_keys(j, "learners", {"decision_tree", "extra_trees", "random_forest", "knn", "mlp", "gbdt"});
  if (j.contains("decision_tree")) {
    const auto& s = j["decision_tree"];
    check_keys(s, "decision_tree", {"max_depth", "min_samples_split", "min_impurity_decrease"});
    read(s, "max_depth", c.decision_tree.max_depth);
    read(s, "min_samples_split", c.decision_tree.min_samples_split);
    read(s, "min_impurity_decrease", c.decision_tree.min_impurity_decrease);
  }
  if (j.contains("extra_trees")) c.extra_trees = forest_from_json(j["extra_trees"], "extra_trees", c.extra_trees);
  if (j.contains("random_forest"))
    c.random_forest = forest_from_json(j["random_forest"], "random_forest", c.random_forest);
  if (j.contains("knn")) {
    check_keys(j["knn"], "knn", {"k"});
    read(j["knn"], "k", c.knn_k);
    if (c.knn_k == 0) throw UsageError("knn.k must be positive");
  }
  if (j.contains("mlp")) {
    const auto& s = j["mlp"];
    check_keys(s, "mlp", {"hidden", "epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "l2"});
    read(s, "hidden", c.mlp.hidden);
    read(s, "epochs", c.mlp.epochs);
    read(s, "batch_size", c.mlp.batch_size);
    read(s, "learning_rate", c.mlp.learning_rate);
    read(s, "beta1", c.mlp.beta1);
    read(s, "beta2", c.mlp.beta2);
    read(s, "epsilon", c.mlp.epsilon);
    read(s, "l2", c.mlp.l2);
    if (c.mlp.batch_size == 0) throw UsageError("mlp.batch_size must be positive");
  }
  if (j.contains("gbdt")) c.gbdt = gbdt_params_from_json(j["gbdt"], c.gbdt);
  return c;
}

json LearnerConfig::to_json() const {
  return {
      {"decision_tree",
       {{"max_depth", decision_tree.max_depth},
        {"min_samples_split", decision_tree.min_samples_split},
        {"min_impurity_decrease", decision_tree.min_impurity_decrease}}},
      {"extra_trees", forest_to_json(extra_trees)},
      {"random_forest", forest_to_json(random_forest)},
      {"knn", {{"k", knn_k}}},
      {"mlp",
       {{"hidden", mlp.hidden},
        {"epochs", mlp.epochs},
        {"batch_size", mlp.batch_size},
        {"learning_rate", mlp.learning_rate},
        {"beta1", mlp.beta1},
        {"beta2", mlp.beta2},
        {"epsilon", mlp.epsilon},
        {"l2", mlp.l2}}},
      {"gbdt", learn::to_json(gbdt)},
  };
}

const std::vector<std::string>& baseline_names() {
  static const std::vector<std::string> names{"decision_tree", "extra_trees", "random_forest",
                                              "knn",           "mlp",         "gbdt"};
  return names;
}

LearnerSpec make_baseline(std::string_view name, const LearnerConfig& cfg) {
  if (name == "decision_tree")
    return {"decision_tree", [p = cfg.decision_tree](const Matrix& X, std::span<const int> y, std::size_t C,
                                                     std::uint64_t seed) -> ClassifierPtr {
              return std::make_unique<DecisionTreeModel>(fit_decision_tree(X, y, C, p, seed));
            }};
  if (name == "extra_trees")
    return {"extra_trees", [p = cfg.extra_trees](const Matrix& X, std::span<const int> y, std::size_t C,
                                                 std::uint64_t seed) -> ClassifierPtr {
              return std::make_unique<ForestModel>(fit_extra_trees(X, y, C, p, seed));
            }};
  if (name == "random_forest")
    return {"random_forest", [p = cfg.random_forest](const Matrix& X, std::span<const int> y, std::size_t C,
                                                     std::uint64_t seed) -> ClassifierPtr {
              return std::make_unique<ForestModel>(fit_random_forest(X, y, C, p, seed));
            }};
  if (name == "knn")
    return {"knn", [k = cfg.knn_k](const Matrix& X, std::span<const int> y, std::size_t C,
                                   std::uint64_t) -> ClassifierPtr {
              return std::make_unique<KnnModel>(fit_knn(X, y, C, k));
            }};
  if (name == "mlp")
    return {"mlp", [p = cfg.mlp](const Matrix& X, std::span<const int> y, std::size_t C,
                                 std::uint64_t seed) -> ClassifierPtr {
              return std::make_unique<MlpModel>(fit_mlp(X, y, C, p, seed));
            }};
  if (name == "gbdt")
    return {"gbdt", [p = cfg.gbdt](const Matrix& X, std::span<const int> y, std::size_t C,
                                   std::uint64_t seed) -> ClassifierPtr {
              return std::make_unique<GbdtModel>(fit_gbdt(X, y, C, p, seed));
            }};
  std::string valid;
  for (const auto& n : baseline_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw UsageError("unknown learner '" + std::string(name) + "'; valid names: " + valid);
}

}  // namespace sdnguard::learn
