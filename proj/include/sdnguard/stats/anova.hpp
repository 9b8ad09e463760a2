#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdnguard/matrix.hpp"

namespace sdnguard::stats {

struct AnovaFeature {
  double f = 0.0;  // may be +inf
  double p = 1.0;
};

struct AnovaResult {
  std::vector<AnovaFeature> features;
  double df_between = 0.0;
  double df_within = 0.0;

  /// Indices whose p-value exceeds alpha (insignificant), ascending.
  std::vector<std::size_t> insignificant(double alpha) const;
};

/// One-way ANOVA of each column of X against class ids in [0, n_classes).
/// Classes with no rows are ignored when counting groups.
AnovaResult anova_f(const Matrix& X, std::span<const int> y, std::size_t n_classes);

nlohmann::json to_json(const AnovaResult& r, const std::vector<std::string>& names);

}  // namespace sdnguard::stats
