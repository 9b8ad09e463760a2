#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdnguard/matrix.hpp"

namespace sdnguard::explain {

/// Attributions for n samples, d features and C outputs, stored as
/// values[(i * d + j) * C + c].
struct ShapAttribution {
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  std::size_t n_outputs = 0;
  std::vector<double> values;
  std::vector<double> base_values;  // C
  Matrix outputs;                   // n x C, the explained model output

  double& at(std::size_t i, std::size_t j, std::size_t c) { return values[(i * n_features + j) * n_outputs + c]; }
  double at(std::size_t i, std::size_t j, std::size_t c) const {
    return values[(i * n_features + j) * n_outputs + c];
  }

  /// Largest |base + sum_j value - output| over all samples and outputs.
  double max_local_accuracy_error() const;
  /// Throws NumericalError when local accuracy is violated beyond `tol`.
  void check_local_accuracy(double tol) const;
};

struct ShapSummary {
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  /// mean |value| per (feature, class), d x C.
  Matrix mean_abs;
  /// Row sums of mean_abs.
  std::vector<double> global;
  /// Features by descending global score, ties to the lower index.
  std::vector<std::size_t> ranking;

  nlohmann::json to_json() const;
  /// Columns feature, class, mean_abs_value.
  std::string to_csv() const;
};

ShapSummary summarize(const ShapAttribution& attr, const std::vector<std::string>& feature_names,
                      const std::vector<std::string>& class_names);

}  // namespace sdnguard::explain
