#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sdnguard/learn/classifier.hpp"
#include "sdnguard/learn/tree.hpp"

namespace sdnguard::learn {

struct GbdtParams {
  std::size_t n_rounds = 200;
  double learning_rate = 0.1;
  std::size_t max_leaves = 31;
  int max_depth = -1;
  double min_child_weight = 1e-3;
  double lambda = 1.0;
  std::size_t max_bins = 256;
};

/// Per-feature split candidates from training quantiles. A value lands in
/// bin b when it is <= thresholds[b] and > thresholds[b-1].
class BinMapper {
 public:
  static BinMapper fit(const Matrix& X, std::size_t max_bins);

  std::size_t n_bins(std::size_t feature) const { return thresholds_[feature].size() + 1; }
  const std::vector<double>& thresholds(std::size_t feature) const { return thresholds_[feature]; }
  std::uint8_t bin(std::size_t feature, double x) const;

  /// Column-major n x d bin codes.
  std::vector<std::uint8_t> transform(const Matrix& X) const;

 private:
  std::vector<std::vector<double>> thresholds_;
};

/// Gradient/hessian sums per bin for one feature.
struct HistBin {
  double g = 0.0;
  double h = 0.0;
  std::uint32_t n = 0;
};

/// Histograms of all features over `rows`. `hist` must hold one vector per
/// feature; each is resized to n_bins(f) entries.
/// Features are filled in parallel; each is independent so the result does
/// not depend on thread count.
void build_histograms(std::span<const std::uint8_t> bins, std::size_t n_rows, const BinMapper& mapper,
                      std::span<const std::size_t> rows, std::span<const double> grad,
                      std::span<const double> hess, std::vector<std::vector<HistBin>>& hist);
void build_histograms_serial(std::span<const std::uint8_t> bins, std::size_t n_rows, const BinMapper& mapper,
                             std::span<const std::size_t> rows, std::span<const double> grad,
                             std::span<const double> hess, std::vector<std::vector<HistBin>>& hist);

/// Softmax Newton boosting: every round fits one regression tree per class.
/// Leaf values are stored already multiplied by the learning rate.
class GbdtModel final : public Classifier {
 public:
  GbdtModel(std::size_t n_features, std::vector<double> base_score, std::vector<Tree> trees, GbdtParams params,
            std::uint64_t seed);

  std::string_view kind() const override { return "gbdt"; }
  std::size_t n_classes() const override { return base_score_.size(); }
  std::size_t n_features() const override { return n_features_; }

  Matrix predict_proba(const Matrix& X) const override;

  /// Raw scores after the first `rounds` rounds (all rounds by default).
  Matrix predict_margin(const Matrix& X, std::size_t rounds = SIZE_MAX) const;

  std::size_t n_rounds() const { return n_classes() == 0 ? 0 : trees_.size() / n_classes(); }
  const Tree& tree(std::size_t round, std::size_t cls) const { return trees_[round * n_classes() + cls]; }
  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<double>& base_score() const { return base_score_; }
  const GbdtParams& params() const { return params_; }

  /// Training log-loss after 0..n_rounds rounds (filled by fit_gbdt).
  const std::vector<double>& train_loss() const { return train_loss_; }
  void set_train_loss(std::vector<double> l) { train_loss_ = std::move(l); }

  Record to_record() const override;
  static GbdtModel from_record(const Record& r);

 private:
  std::size_t n_features_;
  std::vector<double> base_score_;
  std::vector<Tree> trees_;  // round-major
  GbdtParams params_;
  std::uint64_t seed_;
  std::vector<double> train_loss_;
};

GbdtModel fit_gbdt(const Matrix& X, std::span<const int> y, std::size_t n_classes, const GbdtParams& params,
                   std::uint64_t seed);

void softmax_inplace(std::span<double> row);

double log_loss(const Matrix& proba, std::span<const int> y);

}  // namespace sdnguard::learn
