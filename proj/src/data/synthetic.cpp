#include "sdnguard/data/synthetic.hpp"

#include <cmath>

#include "sdnguard/errors.hpp"
#include "sdnguard/rng.hpp"

namespace sdnguard::data {

std::vector<double> synthetic_class_mean(const SyntheticSpec& spec, std::size_t cls) {
  std::vector<double> mean(spec.n_features, 0.0);
  if (spec.n_features >= spec.n_classes) {
    // Scaled simplex corners: every pair sits exactly class_separation apart.
    mean[cls] = spec.class_separation / std::sqrt(2.0);
  } else {
    mean[0] = static_cast<double>(cls) * spec.class_separation;
  }
  return mean;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_classes < 1 || spec.n_features < 1 || spec.n_per_class < 1)
    throw UsageError("synthetic dataset dimensions must all be at least 1");
  Rng rng(spec.seed);
  Dataset ds;
  const std::size_t n = spec.n_classes * spec.n_per_class;
  ds.X = Matrix(n, spec.n_features);
  ds.y.resize(n);
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    const auto mean = synthetic_class_mean(spec, c);
    for (std::size_t k = 0; k < spec.n_per_class; ++k) {
      const std::size_t i = c * spec.n_per_class + k;
      for (std::size_t j = 0; j < spec.n_features; ++j) ds.X(i, j) = mean[j] + rng.normal();
      ds.y[i] = static_cast<int>(c);
    }
  }
  for (std::size_t j = 0; j < spec.n_features; ++j) ds.feature_names.push_back("f" + std::to_string(j));
  for (std::size_t c = 0; c < spec.n_classes; ++c) ds.class_names.push_back("class" + std::to_string(c));
  return ds;
}

}  // namespace sdnguard::data
