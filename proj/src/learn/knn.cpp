#include "sdnguard/learn/knn.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "sdnguard/errors.hpp"

namespace sdnguard::learn {

KnnModel::KnnModel(Matrix X, std::vector<int> y, std::size_t n_classes, std::size_t k)
    : X_(std::move(X)), y_(std::move(y)), n_classes_(n_classes), k_(k) {
  if (k_ < 1) throw UsageError("knn needs k >= 1");
  if (X_.rows() == 0) throw DataError("knn needs at least one training row");
  if (y_.size() != X_.rows()) throw DataError("label count does not match row count");
  for (int label : y_)
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes_) throw DataError("label outside [0, C)");
}

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> query) const {
  const std::size_t k = std::min(k_, X_.rows());
  const std::size_t d = X_.cols();
  // Max-heap on (squared distance, row): the top is the current k-th best.
  std::vector<std::pair<double, std::size_t>> heap;
  heap.reserve(k + 1);
  for (std::size_t r = 0; r < X_.rows(); ++r) {
    const auto row = X_.row(r);
    const bool full = heap.size() == k;
    const double bound = full ? heap.front().first : HUGE_VAL;
    double dist = 0.0;
    std::size_t j = 0;
    // Rows are scanned in ascending order, so a later row that only ties the
    // k-th distance can never displace it; stop as soon as the bound is hit.
    for (; j < d; ++j) {
      const double diff = row[j] - query[j];
      dist += diff * diff;
      if (full && dist >= bound) break;
    }
    if (j < d) continue;
    if (!full) {
      heap.emplace_back(dist, r);
      std::push_heap(heap.begin(), heap.end());
    } else if (std::make_pair(dist, r) < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = {dist, r};
      std::push_heap(heap.begin(), heap.end());
    }
  }
  std::sort_heap(heap.begin(), heap.end());
  std::vector<std::size_t> out;
  out.reserve(heap.size());
  for (const auto& [dist, r] : heap) out.push_back(r);
  return out;
}

void KnnModel::vote(std::span<const double> query, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const auto nb = neighbors(query);
  const double w = 1.0 / static_cast<double>(nb.size());
  for (auto r : nb) out[static_cast<std::size_t>(y_[r])] += w;
}

Matrix KnnModel::predict_proba(const Matrix& X) const {
  check_width(X);
  Matrix out(X.rows(), n_classes_);
  const auto n = static_cast<std::ptrdiff_t>(X.rows());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    vote(X.row(static_cast<std::size_t>(i)), out.row(static_cast<std::size_t>(i)));
  return out;
}

Matrix KnnModel::predict_proba_serial(const Matrix& X) const {
  check_width(X);
  Matrix out(X.rows(), n_classes_);
  for (std::size_t i = 0; i < X.rows(); ++i) vote(X.row(i), out.row(i));
  return out;
}

Record KnnModel::to_record() const {
  Record r("knn");
  r.put_int("k", static_cast<std::int64_t>(k_));
  r.put_int("n_classes", static_cast<std::int64_t>(n_classes_));
  r.put("shape", std::vector<std::int64_t>{static_cast<std::int64_t>(X_.rows()), static_cast<std::int64_t>(X_.cols())});
  r.put("X", X_.data());
  r.put("y", std::vector<std::int64_t>(y_.begin(), y_.end()));
  return r;
}

KnnModel KnnModel::from_record(const Record& r) {
  r.expect_type("knn");
  const auto& shape = r.ints("shape");
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) throw DataError("bad knn shape");
  const auto rows = static_cast<std::size_t>(shape[0]), cols = static_cast<std::size_t>(shape[1]);
  const auto& x = r.reals("X");
  const auto& y = r.ints("y");
  if (x.size() != rows * cols || y.size() != rows) throw DataError("knn arrays disagree with shape");
  return KnnModel(Matrix(rows, cols, x), std::vector<int>(y.begin(), y.end()),
                  static_cast<std::size_t>(r.integer("n_classes")), static_cast<std::size_t>(r.integer("k")));
}

KnnModel fit_knn(const Matrix& X, std::span<const int> y, std::size_t n_classes, std::size_t k) {
  return KnnModel(X, std::vector<int>(y.begin(), y.end()), n_classes, k);
}

}  // namespace sdnguard::learn
