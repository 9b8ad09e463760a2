#include "sdnguard/explain/kernel_shap.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>

#include "sdnguard/errors.hpp"
#include "sdnguard/rng.hpp"

namespace sdnguard::explain {

namespace {

using Mask = std::vector<std::uint8_t>;

constexpr std::size_t kRowsPerCall = 8192;

// Mean model output over the background with the features in each mask
// taken from x. Returns masks.size() x C.
Matrix coalition_values(const ModelFn& f, std::span<const double> x, const Matrix& background,
                        const std::vector<Mask>& masks) {
  const std::size_t nb = background.rows(), d = background.cols();
  const std::size_t per_call = std::max<std::size_t>(1, kRowsPerCall / nb);
  Matrix out;
  for (std::size_t start = 0; start < masks.size(); start += per_call) {
    const std::size_t stop = std::min(masks.size(), start + per_call);
    Matrix batch((stop - start) * nb, d);
    for (std::size_t m = start; m < stop; ++m)
      for (std::size_t b = 0; b < nb; ++b) {
        auto row = batch.row((m - start) * nb + b);
        const auto src = background.row(b);
        for (std::size_t j = 0; j < d; ++j) row[j] = masks[m][j] ? x[j] : src[j];
      }
    const Matrix pred = f(batch);
    if (pred.rows() != batch.rows()) throw DataError("model function returned the wrong number of rows");
    if (out.empty()) out = Matrix(masks.size(), pred.cols());
    for (std::size_t m = start; m < stop; ++m) {
      auto dst = out.row(m);
      for (std::size_t b = 0; b < nb; ++b) {
        const auto p = pred.row((m - start) * nb + b);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += p[c];
      }
      for (auto& v : dst) v /= static_cast<double>(nb);
    }
  }
  return out;
}

void check_inputs(std::span<const double> x, const Matrix& background) {
  if (background.rows() == 0) throw UsageError("SHAP needs a nonempty background set");
  if (x.empty()) throw UsageError("SHAP needs at least one feature");
  if (background.cols() != x.size()) throw DataError("background width does not match the explained row");
}

double binomial(std::size_t n, std::size_t k) {
  return std::exp(std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
                  std::lgamma(static_cast<double>(n - k + 1)));
}

}  // namespace

KernelShapRow kernel_shap(const ModelFn& f, std::span<const double> x, const Matrix& background,
                          const KernelShapOptions& opts) {
  check_inputs(x, background);
  const std::size_t d = x.size();

  std::vector<Mask> ends{Mask(d, 0), Mask(d, 1)};
  const Matrix end_values = coalition_values(f, x, background, ends);
  const std::size_t C = end_values.cols();

  KernelShapRow out;
  out.base.assign(end_values.row(0).begin(), end_values.row(0).end());
  out.output.assign(end_values.row(1).begin(), end_values.row(1).end());
  out.values.assign(d * C, 0.0);
  std::vector<double> delta(C);
  for (std::size_t c = 0; c < C; ++c) delta[c] = out.output[c] - out.base[c];
  if (d == 1) {
    out.enumerated = true;
    std::copy(delta.begin(), delta.end(), out.values.begin());
    return out;
  }

  std::vector<Mask> masks;
  std::vector<double> weights;
  const bool enumerate = d < 63 && (std::uint64_t{1} << d) - 2 <= opts.n_coalitions;
  if (enumerate) {
    out.enumerated = true;
    for (std::uint64_t bits = 1; bits + 1 < (std::uint64_t{1} << d); ++bits) {
      Mask m(d);
      std::size_t s = 0;
      for (std::size_t j = 0; j < d; ++j) s += m[j] = (bits >> j) & 1u;
      masks.push_back(std::move(m));
      weights.push_back(static_cast<double>(d - 1) /
                        (binomial(d, s) * static_cast<double>(s) * static_cast<double>(d - s)));
    }
  } else {
    // Sizes drawn with probability proportional to their total kernel
    // weight and subsets uniform within a size, so every coalition is drawn
    // in proportion to its kernel weight; draws come in complement pairs.
    std::vector<double> size_weight(d, 0.0);
    for (std::size_t s = 1; s < d; ++s)
      size_weight[s] = 1.0 / (static_cast<double>(s) * static_cast<double>(d - s));
    std::vector<double> cdf(d, 0.0);
    std::partial_sum(size_weight.begin(), size_weight.end(), cdf.begin());
    Rng rng(opts.seed);
    std::vector<std::size_t> perm(d);
    std::map<Mask, std::size_t> counts;
    for (std::size_t draw = 0; draw < std::max<std::size_t>(1, opts.n_coalitions / 2); ++draw) {
      const double u = rng.uniform() * cdf.back();
      std::size_t s = 1;
      while (s + 1 < d && cdf[s] <= u) ++s;
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      Mask m(d, 0);
      for (std::size_t k = 0; k < s; ++k) {
        std::swap(perm[k], perm[k + rng.below(d - k)]);
        m[perm[k]] = 1;
      }
      Mask comp(d);
      for (std::size_t j = 0; j < d; ++j) comp[j] = 1 - m[j];
      ++counts[m];
      ++counts[comp];
    }
    for (auto& [m, n] : counts) {
      masks.push_back(m);
      weights.push_back(static_cast<double>(n));
    }
  }

  const Matrix v = coalition_values(f, x, background, masks);

  // Efficiency is imposed by eliminating the last feature:
  // phi_last = delta - sum of the others.
  const std::size_t m = masks.size(), p = d - 1;
  Eigen::MatrixXd A(m, p);
  Eigen::MatrixXd Y(m, C);
  for (std::size_t r = 0; r < m; ++r) {
    const double sw = std::sqrt(weights[r]);
    const double last = masks[r][p];
    for (std::size_t j = 0; j < p; ++j) A(r, j) = sw * (masks[r][j] - last);
    for (std::size_t c = 0; c < C; ++c) Y(r, c) = sw * (v(r, c) - out.base[c] - last * delta[c]);
  }
  Eigen::MatrixXd phi;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() == static_cast<Eigen::Index>(p)) {
    phi = qr.solve(Y);
  } else {
    out.ridge_fallback = true;
    Eigen::MatrixXd normal = A.transpose() * A;
    normal.diagonal().array() += 1e-10;
    phi = normal.ldlt().solve(A.transpose() * Y);
  }
  for (std::size_t c = 0; c < C; ++c) {
    double rest = delta[c];
    for (std::size_t j = 0; j < p; ++j) {
      out.values[j * C + c] = phi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
      rest -= out.values[j * C + c];
    }
    out.values[p * C + c] = rest;
  }
  for (double val : out.values)
    if (!std::isfinite(val)) throw NumericalError("kernel SHAP produced non-finite attributions");
  return out;
}

ShapAttribution kernel_shap_all(const ModelFn& f, const Matrix& X, const Matrix& background,
                                const KernelShapOptions& opts, std::size_t* ridge_fallbacks) {
  const std::size_t n = X.rows(), d = X.cols();
  std::vector<KernelShapRow> rows(n);
  std::exception_ptr error;
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < nn; ++i) {
    try {
      auto o = opts;
      o.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(i));
      rows[static_cast<std::size_t>(i)] = kernel_shap(f, X.row(static_cast<std::size_t>(i)), background, o);
    } catch (...) {
#pragma omp critical(sdnguard_kernel_shap_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  ShapAttribution a;
  a.n_samples = n;
  a.n_features = d;
  a.n_outputs = n ? rows[0].base.size() : 0;
  a.base_values = n ? rows[0].base : std::vector<double>{};
  a.outputs = Matrix(n, a.n_outputs);
  a.values.reserve(n * d * a.n_outputs);
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < n; ++i) {
    a.values.insert(a.values.end(), rows[i].values.begin(), rows[i].values.end());
    std::copy(rows[i].output.begin(), rows[i].output.end(), a.outputs.row(i).begin());
    flagged += rows[i].ridge_fallback;
  }
  if (ridge_fallbacks) *ridge_fallbacks = flagged;
  a.check_local_accuracy(1e-2);
  return a;
}

std::vector<double> exact_shapley_from_value(std::size_t d, std::size_t n_outputs, const CoalitionValue& v) {
  if (d == 0 || d > 12) throw UsageError("exact Shapley enumeration supports 1 to 12 features");
  const std::uint64_t total = std::uint64_t{1} << d;
  std::vector<std::vector<double>> value(total);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    value[mask] = v(mask);
    if (value[mask].size() != n_outputs) throw UsageError("coalition value has the wrong number of outputs");
  }
  // |S|! (d - |S| - 1)! / d!
  std::vector<double> fact(d + 1, 1.0);
  for (std::size_t k = 1; k <= d; ++k) fact[k] = fact[k - 1] * static_cast<double>(k);
  std::vector<double> phi(d * n_outputs, 0.0);
  for (std::size_t j = 0; j < d; ++j)
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      if (mask >> j & 1u) continue;
      const auto s = static_cast<std::size_t>(std::popcount(mask));
      const double w = fact[s] * fact[d - s - 1] / fact[d];
      const auto& with = value[mask | (std::uint64_t{1} << j)];
      for (std::size_t c = 0; c < n_outputs; ++c) phi[j * n_outputs + c] += w * (with[c] - value[mask][c]);
    }
  return phi;
}

std::vector<double> exact_shapley(const ModelFn& f, std::span<const double> x, const Matrix& background) {
  check_inputs(x, background);
  const std::size_t d = x.size();
  if (d > 12) throw UsageError("exact Shapley enumeration supports 1 to 12 features");
  std::vector<Mask> masks(std::size_t{1} << d, Mask(d));
  for (std::size_t bits = 0; bits < masks.size(); ++bits)
    for (std::size_t j = 0; j < d; ++j) masks[bits][j] = (bits >> j) & 1u;
  const Matrix v = coalition_values(f, x, background, masks);
  return exact_shapley_from_value(d, v.cols(), [&](std::uint64_t mask) {
    const auto row = v.row(static_cast<std::size_t>(mask));
    return std::vector<double>(row.begin(), row.end());
  });
}

}  // namespace sdnguard::explain
