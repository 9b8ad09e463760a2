#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sdnguard/matrix.hpp"

namespace sdnguard::eval {

enum class CurveKind { kRoc, kPrecisionRecall };

struct Curve {
  CurveKind kind = CurveKind::kRoc;
  std::size_t cls = 0;
  std::vector<double> x;
  std::vector<double> y;
  /// ROC: trapezoidal AUC. PR: step-wise average precision.
  double area = 0.0;
  /// False when the class has no positives (or, for ROC, no negatives).
  bool defined = true;

  std::string to_csv() const;
};

struct ClassCurves {
  Curve roc;
  Curve pr;
};

/// One-vs-rest curves for class `cls` from score column `cls`. Equal scores
/// form one threshold, so ties are handled as a group.
ClassCurves roc_and_pr(std::span<const int> y_true, std::span<const double> scores, std::size_t cls);

/// All classes; classes are processed in parallel.
std::vector<ClassCurves> all_curves(std::span<const int> y_true, const Matrix& proba);

}  // namespace sdnguard::eval
