#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdnguard/learn/classifier.hpp"

namespace sdnguard::learn {

/// Stores the training set; predicts by majority vote among the k nearest
/// rows in Euclidean distance. Equal distances prefer the lower training
/// row; the query itself counts if it is stored.
class KnnModel final : public Classifier {
 public:
  KnnModel(Matrix X, std::vector<int> y, std::size_t n_classes, std::size_t k);

  std::string_view kind() const override { return "knn"; }
  std::size_t n_classes() const override { return n_classes_; }
  std::size_t n_features() const override { return X_.cols(); }

  Matrix predict_proba(const Matrix& X) const override;
  Matrix predict_proba_serial(const Matrix& X) const;

  /// Training rows of the k nearest neighbours, nearest first.
  std::vector<std::size_t> neighbors(std::span<const double> query) const;

  Record to_record() const override;
  static KnnModel from_record(const Record& r);

  std::size_t k() const { return k_; }

 private:
  void vote(std::span<const double> query, std::span<double> out) const;

  Matrix X_;
  std::vector<int> y_;
  std::size_t n_classes_;
  std::size_t k_;
};

KnnModel fit_knn(const Matrix& X, std::span<const int> y, std::size_t n_classes, std::size_t k = 5);

}  // namespace sdnguard::learn
