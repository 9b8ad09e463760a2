#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sdnguard/data/dataset.hpp"

namespace sdnguard::data {

struct SplitSpec {
  double test_fraction = 0.2;
  bool stratified = true;
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;  // ascending
  std::vector<std::size_t> test_rows;   // ascending
};

/// Per-class test count for a stratified split: round-half-up of
/// count * fraction, at least one when the class has two or more rows and
/// never the whole class; a singleton class stays in train.
std::size_t stratified_test_count(std::size_t class_count, double test_fraction);

Split stratified_split(const Dataset& ds, const SplitSpec& spec);

struct ResamplePlan {
  std::size_t target_per_class = 30000;
  std::uint64_t seed = 0;
};

/// Undersamples classes above the target without replacement and tops up
/// classes below it with replacement, keeping every original row at least
/// once. Output is grouped by class.
Dataset hybrid_resample(const Dataset& train, const ResamplePlan& plan);

/// Row indices chosen for one class of `count` rows.
std::vector<std::size_t> resample_class(std::size_t count, std::size_t target, std::uint64_t seed);

}  // namespace sdnguard::data
