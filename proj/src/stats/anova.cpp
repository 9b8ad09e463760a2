#include "sdnguard/stats/anova.hpp"

#include <cmath>
#include <limits>

#include "sdnguard/errors.hpp"
#include "sdnguard/stats/special.hpp"

namespace sdnguard::stats {

std::vector<std::size_t> AnovaResult::insignificant(double alpha) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < features.size(); ++j)
    if (features[j].p > alpha) out.push_back(j);
  return out;
}

AnovaResult anova_f(const Matrix& X, std::span<const int> y, std::size_t n_classes) {
  const std::size_t n = X.rows(), d = X.cols();
  if (y.size() != n) throw DataError("label count does not match row count");
  std::vector<double> counts(n_classes, 0.0);
  for (int label : y) counts.at(static_cast<std::size_t>(label)) += 1.0;
  std::size_t groups = 0;
  for (double c : counts) groups += c > 0.0;
  if (groups < 2) throw DataError("ANOVA needs at least two classes with samples");
  if (n <= groups) throw DataError("ANOVA needs more samples than classes");

  AnovaResult res;
  res.df_between = static_cast<double>(groups - 1);
  res.df_within = static_cast<double>(n - groups);
  res.features.resize(d);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> sums(n_classes, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sums[static_cast<std::size_t>(y[i])] += X(i, j);
      total += X(i, j);
    }
    const double grand = total / static_cast<double>(n);
    std::vector<double> means(n_classes, 0.0);
    double ss_between = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (counts[c] == 0.0) continue;
      means[c] = sums[c] / counts[c];
      ss_between += counts[c] * (means[c] - grand) * (means[c] - grand);
    }
    double ss_within = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = X(i, j) - means[static_cast<std::size_t>(y[i])];
      ss_within += dev * dev;
    }
    AnovaFeature& out = res.features[j];
    if (ss_within == 0.0) {
      out.f = ss_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      out.p = ss_between > 0.0 ? 0.0 : 1.0;
    } else {
      out.f = (ss_between / res.df_between) / (ss_within / res.df_within);
      out.p = f_survival(out.f, res.df_between, res.df_within);
    }
  }
  return res;
}

nlohmann::json to_json(const AnovaResult& r, const std::vector<std::string>& names) {
  nlohmann::json feats = nlohmann::json::array();
  for (std::size_t j = 0; j < r.features.size(); ++j) {
    nlohmann::json f = {{"feature", names.at(j)}, {"p", r.features[j].p}};
    // JSON has no infinity; a null F means unbounded.
    if (std::isfinite(r.features[j].f)) f["F"] = r.features[j].f;
    else f["F"] = nullptr;
    feats.push_back(std::move(f));
  }
  return {{"df_between", r.df_between}, {"df_within", r.df_within}, {"features", feats}};
}

}  // namespace sdnguard::stats
