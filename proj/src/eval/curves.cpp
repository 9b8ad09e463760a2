#include "sdnguard/eval/curves.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "sdnguard/errors.hpp"

namespace sdnguard::eval {

std::string Curve::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17) << "x,y\n";
  for (std::size_t i = 0; i < x.size(); ++i) out << x[i] << ',' << y[i] << '\n';
  return out.str();
}

ClassCurves roc_and_pr(std::span<const int> y_true, std::span<const double> scores, std::size_t cls) {
  if (y_true.size() != scores.size()) throw DataError("label and score lengths differ");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double pos = 0.0;
  for (int label : y_true) pos += static_cast<std::size_t>(label) == cls;
  const double neg = static_cast<double>(n) - pos;

  ClassCurves out;
  out.roc.kind = CurveKind::kRoc;
  out.pr.kind = CurveKind::kPrecisionRecall;
  out.roc.cls = out.pr.cls = cls;
  out.roc.defined = pos > 0.0 && neg > 0.0;
  out.pr.defined = pos > 0.0;

  out.roc.x.push_back(0.0);
  out.roc.y.push_back(0.0);
  out.pr.x.push_back(0.0);
  out.pr.y.push_back(1.0);
  double tp = 0.0, fp = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < n;) {
    const double s = scores[order[i]];
    for (; i < n && scores[order[i]] == s; ++i) (static_cast<std::size_t>(y_true[order[i]]) == cls ? tp : fp) += 1.0;
    const double tpr = pos > 0.0 ? tp / pos : 0.0;
    const double fpr = neg > 0.0 ? fp / neg : 0.0;
    out.roc.x.push_back(fpr);
    out.roc.y.push_back(tpr);
    out.roc.area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_fpr = fpr;
    prev_tpr = tpr;
    const double precision = tp / (tp + fp);
    out.pr.x.push_back(tpr);
    out.pr.y.push_back(precision);
    out.pr.area += (tpr - prev_recall) * precision;
    prev_recall = tpr;
  }
  if (!out.roc.defined) out.roc.area = 0.0;
  if (!out.pr.defined) out.pr.area = 0.0;
  return out;
}

std::vector<ClassCurves> all_curves(std::span<const int> y_true, const Matrix& proba) {
  const std::size_t C = proba.cols();
  std::vector<ClassCurves> out(C);
  const auto nc = static_cast<std::ptrdiff_t>(C);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < nc; ++c)
    out[static_cast<std::size_t>(c)] =
        roc_and_pr(y_true, proba.column(static_cast<std::size_t>(c)), static_cast<std::size_t>(c));
  return out;
}

}  // namespace sdnguard::eval
