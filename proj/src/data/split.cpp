#include "sdnguard/data/split.hpp"

#include <algorithm>
#include <cmath>

#include "sdnguard/errors.hpp"
#include "sdnguard/rng.hpp"

namespace sdnguard::data {

std::size_t stratified_test_count(std::size_t class_count, double test_fraction) {
  if (class_count < 2) return 0;
  auto k = static_cast<std::size_t>(std::floor(static_cast<double>(class_count) * test_fraction + 0.5));
  return std::clamp<std::size_t>(k, 1, class_count - 1);
}

Split stratified_split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw UsageError("test_fraction must lie in (0, 1)");
  const std::size_t n = ds.n_rows();
  std::vector<char> is_test(n, 0);
  if (spec.stratified) {
    auto groups = rows_by_class(ds.y, ds.n_classes());
    for (std::size_t c = 0; c < groups.size(); ++c) {
      auto& g = groups[c];
      Rng rng(derive_seed(spec.seed, c));
      rng.shuffle(std::span<std::size_t>(g));
      const std::size_t k = stratified_test_count(g.size(), spec.test_fraction);
      for (std::size_t i = 0; i < k; ++i) is_test[g[i]] = 1;
    }
  } else {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    Rng rng(spec.seed);
    rng.shuffle(std::span<std::size_t>(all));
    const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_fraction + 0.5));
    for (std::size_t i = 0; i < k; ++i) is_test[all[i]] = 1;
  }
  Split out;
  for (std::size_t i = 0; i < n; ++i) (is_test[i] ? out.test_rows : out.train_rows).push_back(i);
  out.train = ds.subset(out.train_rows);
  out.test = ds.subset(out.test_rows);
  return out;
}

std::vector<std::size_t> resample_class(std::size_t count, std::size_t target, std::uint64_t seed) {
  std::vector<std::size_t> picked;
  if (count == 0) return picked;
  if (count == target) {
    picked.resize(count);
    for (std::size_t i = 0; i < count; ++i) picked[i] = i;
    return picked;
  }
  Rng rng(seed);
  if (count > target) {
    // Partial Fisher-Yates: the first `target` slots are a uniform sample.
    std::vector<std::size_t> pool(count);
    for (std::size_t i = 0; i < count; ++i) pool[i] = i;
    for (std::size_t i = 0; i < target; ++i) std::swap(pool[i], pool[i + rng.below(count - i)]);
    picked.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(target));
    std::sort(picked.begin(), picked.end());
    return picked;
  }
  picked.resize(count);
  for (std::size_t i = 0; i < count; ++i) picked[i] = i;
  for (std::size_t i = count; i < target; ++i) picked.push_back(rng.below(count));
  return picked;
}

Dataset hybrid_resample(const Dataset& train, const ResamplePlan& plan) {
  if (plan.target_per_class < 1) throw UsageError("target_per_class must be at least 1");
  if (train.n_rows() == 0) throw DataError("cannot resample an empty dataset");
  auto groups = rows_by_class(train.y, train.n_classes());
  std::vector<std::size_t> rows;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& g = groups[c];
    for (auto k : resample_class(g.size(), plan.target_per_class, derive_seed(plan.seed, c))) rows.push_back(g[k]);
  }
  return train.subset(rows);
}

}  // namespace sdnguard::data
