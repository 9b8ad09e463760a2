#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sdnguard/matrix.hpp"

namespace sdnguard::data {

/// Feature matrix plus integer labels and the name tables that give them
/// meaning. Every stage after preprocessing consumes and produces these.
struct Dataset {
  Matrix X;
  std::vector<int> y;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::size_t n_rows() const { return X.rows(); }
  std::size_t n_features() const { return X.cols(); }
  std::size_t n_classes() const { return class_names.size(); }

  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset with_features(std::span<const std::size_t> cols) const;

  /// Throws DataError on shape disagreement, non-finite cells or labels
  /// outside [0, C).
  void validate() const;
};

std::vector<std::size_t> class_counts(std::span<const int> y, std::size_t n_classes);

/// Row indices grouped by class, each group in ascending row order.
std::vector<std::vector<std::size_t>> rows_by_class(std::span<const int> y, std::size_t n_classes);

/// Little-endian binary cache:
///   "SDGD" u32(version=1) u64(n) u64(d) u64(C)
///   str(feature_name)[d] str(class_name)[C]
///   f64 X[n*d] (row-major) i32 y[n]
/// where str := u64(len) bytes.
std::string encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::string_view bytes);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace sdnguard::data
