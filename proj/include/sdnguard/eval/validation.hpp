#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdnguard/data/dataset.hpp"
#include "sdnguard/learn/registry.hpp"

namespace sdnguard::eval {

/// Fold id per row. Each class is shuffled under the seed and dealt round
/// robin, so every fold holds floor or ceil of count / k rows of each class.
std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t n_classes, std::size_t k,
                                          std::uint64_t seed);

struct CvReport {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
  /// Kappa of a model fit on all of `ds`, scored on the held-out test set.
  std::optional<double> test_kappa;

  nlohmann::json to_json() const;
};

CvReport stratified_kfold_cv(const data::Dataset& ds, const learn::LearnerSpec& learner, std::size_t k,
                             std::uint64_t seed, const data::Dataset* test = nullptr);

struct LearningCurve {
  std::vector<double> fractions;
  std::vector<std::size_t> train_sizes;
  std::vector<double> train_accuracy;
  std::vector<double> validation_accuracy;

  nlohmann::json to_json() const;
};

/// Fits on stratified prefixes of `train` (fraction 1.0 is the whole set,
/// in original order) and scores each on itself and on `validation`.
/// Fractions must be strictly increasing within (0, 1].
LearningCurve learning_curve(const data::Dataset& train, const data::Dataset& validation,
                             const learn::LearnerSpec& learner, std::span<const double> fractions,
                             std::uint64_t seed);

/// Rows kept by learning_curve for one fraction, ascending.
std::vector<std::size_t> stratified_prefix(std::span<const int> y, std::size_t n_classes, double fraction,
                                           std::uint64_t seed);

struct BenchmarkRow {
  std::string name;
  double fit_seconds = 0.0;
  /// Only for the stack: base + meta phase and base refit phase.
  std::optional<double> stack_base_meta_seconds;
  std::optional<double> stack_refit_seconds;
};

/// Wall-clock fit time per learner; the minimum over `repeats` runs.
std::vector<BenchmarkRow> benchmark(std::span<const learn::LearnerSpec> learners, const data::Dataset& ds,
                                    std::uint64_t seed, std::size_t repeats = 1);

nlohmann::json to_json(const std::vector<BenchmarkRow>& rows);

}  // namespace sdnguard::eval
