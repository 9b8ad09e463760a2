#include "sdnguard/stats/mutual_info.hpp"

#include <algorithm>
#include <cmath>

#include "sdnguard/errors.hpp"
#include "sdnguard/rng.hpp"
#include "sdnguard/stats/special.hpp"

namespace sdnguard::stats {

double mutual_info_column(std::span<const double> column, std::span<const int> y, std::size_t n_classes,
                          const MiParams& params, std::uint64_t column_seed) {
  const std::size_t n = column.size();
  if (params.k < 1) throw UsageError("mutual information needs k >= 1");
  if (n <= params.k + 1) throw DataError("mutual information needs more than k + 1 samples");

  double mean = 0.0;
  for (double v : column) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : column) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  if (!(sd > 0.0)) return 0.0;

  std::vector<double> x(column.begin(), column.end());
  double mean_abs = 0.0;
  for (auto& v : x) {
    v /= sd;
    mean_abs += std::fabs(v);
  }
  mean_abs /= static_cast<double>(n);
  Rng rng(column_seed);
  const double scale = params.jitter * std::max(1.0, mean_abs);
  for (auto& v : x) v += scale * rng.normal();

  std::vector<std::vector<double>> by_class(n_classes);
  for (std::size_t i = 0; i < n; ++i) by_class.at(static_cast<std::size_t>(y[i])).push_back(x[i]);

  // Samples whose class is a singleton carry no neighbour information.
  std::vector<double> pooled;
  pooled.reserve(n);
  for (const auto& g : by_class)
    if (g.size() > 1) pooled.insert(pooled.end(), g.begin(), g.end());
  std::sort(pooled.begin(), pooled.end());
  const std::size_t used = pooled.size();
  if (used == 0) return 0.0;

  double sum_psi_k = 0.0, sum_psi_label = 0.0, sum_psi_m = 0.0;
  for (auto& g : by_class) {
    if (g.size() < 2) continue;
    std::sort(g.begin(), g.end());
    const std::size_t kc = std::min(params.k, g.size() - 1);
    const double psi_k = digamma(static_cast<double>(kc));
    const double psi_label = digamma(static_cast<double>(g.size()));
    for (std::size_t p = 0; p < g.size(); ++p) {
      // k-th nearest within-class distance by expanding outwards in 1-D.
      std::size_t lo = p, hi = p;
      double dist = 0.0;
      for (std::size_t step = 0; step < kc; ++step) {
        const double left = lo > 0 ? g[p] - g[lo - 1] : HUGE_VAL;
        const double right = hi + 1 < g.size() ? g[hi + 1] - g[p] : HUGE_VAL;
        if (left <= right) {
          dist = left;
          --lo;
        } else {
          dist = right;
          ++hi;
        }
      }
      const double xi = g[p];
      auto first = std::partition_point(pooled.begin(), pooled.end(), [&](double v) { return xi - v >= dist; });
      auto last = std::partition_point(first, pooled.end(), [&](double v) { return v - xi < dist; });
      const auto m = std::max<std::ptrdiff_t>(last - first, 1);
      sum_psi_k += psi_k;
      sum_psi_label += psi_label;
      sum_psi_m += digamma(static_cast<double>(m));
    }
  }
  const double nu = static_cast<double>(used);
  const double mi = digamma(nu) + (sum_psi_k - sum_psi_label - sum_psi_m) / nu;
  return std::max(0.0, mi);
}

MiScores mutual_info(const Matrix& X, std::span<const int> y, std::size_t n_classes, const MiParams& params) {
  if (y.size() != X.rows()) throw DataError("label count does not match row count");
  MiScores out{std::vector<double>(X.cols(), 0.0), params};
  const auto d = static_cast<std::ptrdiff_t>(X.cols());
  // Exceptions cannot leave an OpenMP region; capture the first one.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < d; ++j) {
    try {
      const auto col = X.column(static_cast<std::size_t>(j));
      out.mi[static_cast<std::size_t>(j)] =
          mutual_info_column(col, y, n_classes, params, derive_seed(params.seed, static_cast<std::uint64_t>(j)));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

MiScores mutual_info_serial(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                            const MiParams& params) {
  if (y.size() != X.rows()) throw DataError("label count does not match row count");
  MiScores out{std::vector<double>(X.cols(), 0.0), params};
  for (std::size_t j = 0; j < X.cols(); ++j)
    out.mi[j] = mutual_info_column(X.column(j), y, n_classes, params, derive_seed(params.seed, j));
  return out;
}

}  // namespace sdnguard::stats
