#pragma once

#include <cstddef>
#include <cstdint>

#include "sdnguard/data/dataset.hpp"

namespace sdnguard::data {

struct SyntheticSpec {
  std::size_t n_classes = 3;
  std::size_t n_features = 4;
  std::size_t n_per_class = 100;
  double class_separation = 10.0;
  std::uint64_t seed = 0;
};

/// Unit-covariance Gaussian blobs whose means sit at pairwise distance at
/// least class_separation.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// Class mean used by generate_synthetic.
std::vector<double> synthetic_class_mean(const SyntheticSpec& spec, std::size_t cls);

}  // namespace sdnguard::data
