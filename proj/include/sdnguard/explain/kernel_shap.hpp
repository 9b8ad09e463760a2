#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sdnguard/explain/attribution.hpp"
#include "sdnguard/matrix.hpp"

namespace sdnguard::explain {

/// Batch model function: n x d inputs to n x C outputs. Must be safe to call
/// concurrently.
using ModelFn = std::function<Matrix(const Matrix&)>;

struct KernelShapOptions {
  /// Coalition budget excluding the empty and full coalitions. When
  /// 2^d - 2 fits the budget every coalition is enumerated and the result is
  /// exact and seed-independent.
  std::size_t n_coalitions = 2048;
  std::uint64_t seed = 0;
};

struct KernelShapRow {
  std::vector<double> values;  // d x C
  std::vector<double> base;    // mean model output over the background
  std::vector<double> output;  // model output at x
  bool enumerated = false;
  /// The regression was singular and solved with a 1e-10 ridge.
  bool ridge_fallback = false;
};

/// Missing features are imputed by averaging over the background rows.
KernelShapRow kernel_shap(const ModelFn& f, std::span<const double> x, const Matrix& background,
                          const KernelShapOptions& opts);

/// One kernel_shap per row of X, seeded per row, run in parallel.
/// `ridge_fallbacks` (optional) receives the number of flagged rows.
ShapAttribution kernel_shap_all(const ModelFn& f, const Matrix& X, const Matrix& background,
                                const KernelShapOptions& opts, std::size_t* ridge_fallbacks = nullptr);

/// Value of a coalition (bit j set = feature j present) for every output.
using CoalitionValue = std::function<std::vector<double>(std::uint64_t mask)>;

/// Shapley values by enumerating all 2^d coalitions; d <= 12.
std::vector<double> exact_shapley_from_value(std::size_t d, std::size_t n_outputs, const CoalitionValue& v);

/// exact_shapley_from_value with background-averaging imputation.
std::vector<double> exact_shapley(const ModelFn& f, std::span<const double> x, const Matrix& background);

}  // namespace sdnguard::explain
