#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sdnguard/learn/classifier.hpp"

namespace sdnguard::learn {

struct MlpParams {
  std::vector<std::size_t> hidden{128, 64};
  std::size_t epochs = 30;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2 = 1e-4;
};

/// Weights and biases of a ReLU network with a softmax head. Layer l maps
/// sizes[l] -> sizes[l+1]; weights[l] is row-major (in x out).
struct MlpParameters {
  std::vector<std::size_t> sizes;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static MlpParameters zeros_like(const MlpParameters& p);
  std::size_t count() const;
};

/// Mean cross-entropy over `rows` plus (l2 / 2) * sum of squared weights.
/// Fills `grad` (same shape as params) when it is non-null.
double mlp_loss(const MlpParameters& params, const Matrix& X, std::span<const int> y,
                std::span<const std::size_t> rows, double l2, MlpParameters* grad);

class MlpModel final : public Classifier {
 public:
  MlpModel(MlpParameters params, MlpParams hyper, std::uint64_t seed)
      : params_(std::move(params)), hyper_(std::move(hyper)), seed_(seed) {}

  std::string_view kind() const override { return "mlp"; }
  std::size_t n_classes() const override { return params_.sizes.back(); }
  std::size_t n_features() const override { return params_.sizes.front(); }

  /// Row at a time, so single-row and batched calls agree bit for bit.
  Matrix predict_proba(const Matrix& X) const override;

  Record to_record() const override;
  static MlpModel from_record(const Record& r);

  const MlpParameters& parameters() const { return params_; }
  /// Mean training loss after each epoch.
  const std::vector<double>& loss_history() const { return loss_history_; }
  void set_loss_history(std::vector<double> h) { loss_history_ = std::move(h); }

 private:
  MlpParameters params_;
  MlpParams hyper_;
  std::uint64_t seed_;
  std::vector<double> loss_history_;
};

/// He-normal weights, zero biases.
MlpParameters init_mlp(std::span<const std::size_t> sizes, std::uint64_t seed);

/// Mini-batch Adam on softmax cross-entropy. Throws NumericalError if the
/// loss stops being finite.
MlpModel fit_mlp(const Matrix& X, std::span<const int> y, std::size_t n_classes, const MlpParams& params,
                 std::uint64_t seed);

}  // namespace sdnguard::learn
