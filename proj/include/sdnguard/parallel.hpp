#pragma once

#include <omp.h>

namespace sdnguard {

/// Caps OpenMP parallelism for everything in the library. 0 restores the
/// machine default.
inline void set_num_threads(int n) {
  static const int default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : default_threads);
}

inline int num_threads() { return omp_get_max_threads(); }

}  // namespace sdnguard
