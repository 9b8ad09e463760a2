#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sdnguard/matrix.hpp"

namespace sdnguard::stats {

struct MiParams {
  std::size_t k = 3;
  std::uint64_t seed = 0;
  double jitter = 1e-10;
};

struct MiScores {
  std::vector<double> mi;  // nats, clipped at 0
  MiParams params;
};

/// Nearest-neighbour estimate of I(x; y) for one continuous column against
/// a discrete target. Ties are broken by a seeded jitter scaled to the
/// column; constant columns score 0.
double mutual_info_column(std::span<const double> x, std::span<const int> y, std::size_t n_classes,
                          const MiParams& params, std::uint64_t column_seed);

/// Scores every column; columns run in parallel.
MiScores mutual_info(const Matrix& X, std::span<const int> y, std::size_t n_classes, const MiParams& params);

/// Column-at-a-time reference with no threading.
MiScores mutual_info_serial(const Matrix& X, std::span<const int> y, std::size_t n_classes,
                            const MiParams& params);

}  // namespace sdnguard::stats
