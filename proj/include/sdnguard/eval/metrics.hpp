#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sdnguard::eval {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::size_t n_classes = 0;
  std::vector<std::size_t> counts;

  std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * n_classes + pred]; }
  std::size_t total() const;
  nlohmann::json to_json() const;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes);

enum class Averaging { kWeighted, kMacro };

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  /// Zero denominators are reported as 0 and flagged here.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double kappa = 0.0;
  Averaging averaging = Averaging::kWeighted;
  std::vector<ClassMetrics> per_class;

  nlohmann::json to_json(const std::vector<std::string>& class_names) const;
};

/// Throws DataError on an empty matrix.
MetricsReport metrics(const ConfusionMatrix& cm, Averaging averaging = Averaging::kWeighted);

double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// (p_o - p_e) / (1 - p_e); defined as 1 for perfect agreement when p_e = 1.
double cohen_kappa(const ConfusionMatrix& cm);

}  // namespace sdnguard::eval
