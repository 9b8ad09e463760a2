#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdnguard/learn/classifier.hpp"
#include "sdnguard/learn/gbdt.hpp"
#include "sdnguard/learn/registry.hpp"

namespace sdnguard::stack {

enum class MetaFeatureKind { kProbabilities, kLabels };

struct StackConfig {
  std::vector<std::string> base_learners{"decision_tree", "extra_trees", "mlp"};
  learn::GbdtParams meta;
  double inner_val_fraction = 0.25;
  MetaFeatureKind meta_features = MetaFeatureKind::kProbabilities;
  /// Refit the bases on the whole training set once the meta learner is fitted.
  bool refit_bases = true;
  /// 0 = single stratified holdout; k >= 2 = out-of-fold meta features.
  std::size_t oof_folds = 0;
  std::uint64_t seed = 0;

  static StackConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct StackProvenance {
  std::size_t n_inner_train = 0;
  std::size_t n_val = 0;
  /// Training rows whose base predictions formed the meta training set.
  std::vector<std::size_t> meta_rows;
  /// Wall-clock phases; not serialized.
  double seconds_base_and_meta = 0.0;
  double seconds_refit = 0.0;
};

class StackModel final : public learn::Classifier {
 public:
  StackModel(std::vector<std::string> base_names, std::vector<learn::ClassifierPtr> bases, learn::GbdtModel meta,
             MetaFeatureKind kind, std::size_t n_classes, std::uint64_t seed, StackProvenance provenance);

  std::string_view kind() const override { return "stack"; }
  std::size_t n_classes() const override { return n_classes_; }
  std::size_t n_features() const override { return bases_.front()->n_features(); }

  Matrix predict_proba(const Matrix& X) const override;

  std::size_t meta_width() const;
  Matrix meta_features(const Matrix& X) const;

  const std::vector<learn::ClassifierPtr>& bases() const { return bases_; }
  const std::vector<std::string>& base_names() const { return base_names_; }
  const learn::GbdtModel& meta() const { return meta_; }
  MetaFeatureKind meta_feature_kind() const { return kind_; }
  const StackProvenance& provenance() const { return provenance_; }

  Record to_record() const override;
  static StackModel from_record(const Record& r);

 private:
  std::vector<std::string> base_names_;
  std::vector<learn::ClassifierPtr> bases_;
  learn::GbdtModel meta_;
  MetaFeatureKind kind_;
  std::size_t n_classes_;
  std::uint64_t seed_;
  StackProvenance provenance_;
};

/// Base predictions laid side by side: C probability columns per base, or
/// one predicted-label column per base.
Matrix build_meta_features(std::span<const learn::ClassifierPtr> bases, const Matrix& X, MetaFeatureKind kind);

/// Holdout stacking: stratified inner split, bases fit on the inner train
/// part, meta learner fit on their predictions for the held-out part.
StackModel fit_stack(const Matrix& X, std::span<const int> y, std::size_t n_classes, const StackConfig& cfg,
                     std::span<const learn::LearnerSpec> bases);

/// Same, with bases built from their names.
StackModel fit_stack(const Matrix& X, std::span<const int> y, std::size_t n_classes, const StackConfig& cfg,
                     const learn::LearnerConfig& learners);

}  // namespace sdnguard::stack

namespace sdnguard::stack {

/// The six baselines followed by "stack".
const std::vector<std::string>& model_names();

/// Any of model_names(); throws UsageError listing them otherwise.
learn::LearnerSpec make_learner(std::string_view name, const learn::LearnerConfig& learners,
                                const StackConfig& stack_cfg);

}  // namespace sdnguard::stack
