#include "sdnguard/data/dataset.hpp"

#include <cmath>

#include "sdnguard/archive.hpp"
#include "sdnguard/errors.hpp"

namespace sdnguard::data {

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.X = X.select_rows(rows);
  out.y.reserve(rows.size());
  for (auto r : rows) out.y.push_back(y[r]);
  out.feature_names = feature_names;
  out.class_names = class_names;
  return out;
}

Dataset Dataset::with_features(std::span<const std::size_t> cols) const {
  Dataset out;
  out.X = X.select_cols(cols);
  out.y = y;
  for (auto c : cols) out.feature_names.push_back(feature_names.at(c));
  out.class_names = class_names;
  return out;
}

void Dataset::validate() const {
  if (y.size() != X.rows()) throw DataError("label count does not match row count");
  if (feature_names.size() != X.cols()) throw DataError("feature name count does not match width");
  for (double v : X.data())
    if (!std::isfinite(v)) throw DataError("dataset contains a non-finite value");
  for (int label : y)
    if (label < 0 || static_cast<std::size_t>(label) >= class_names.size())
      throw DataError("label " + std::to_string(label) + " outside the class table");
}

std::vector<std::size_t> class_counts(std::span<const int> y, std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (int label : y) ++counts.at(static_cast<std::size_t>(label));
  return counts;
}

std::vector<std::vector<std::size_t>> rows_by_class(std::span<const int> y, std::size_t n_classes) {
  std::vector<std::vector<std::size_t>> groups(n_classes);
  for (std::size_t i = 0; i < y.size(); ++i) groups.at(static_cast<std::size_t>(y[i])).push_back(i);
  return groups;
}

namespace {
constexpr char kMagic[4] = {'S', 'D', 'G', 'D'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::string encode_dataset(const Dataset& ds) {
  std::string out(kMagic, 4);
  bytes::put_u32(out, kVersion);
  bytes::put_u64(out, ds.n_rows());
  bytes::put_u64(out, ds.n_features());
  bytes::put_u64(out, ds.n_classes());
  for (const auto& n : ds.feature_names) bytes::put_str(out, n);
  for (const auto& n : ds.class_names) bytes::put_str(out, n);
  out.reserve(out.size() + ds.X.data().size() * 8 + ds.y.size() * 4);
  for (double v : ds.X.data()) bytes::put_f64(out, v);
  for (int label : ds.y) bytes::put_u32(out, static_cast<std::uint32_t>(label));
  return out;
}

Dataset decode_dataset(std::string_view data) {
  bytes::Reader in(data);
  if (in.take(4) != std::string_view(kMagic, 4)) throw DataError("not a dataset container (bad magic)");
  if (auto v = in.u32(); v != kVersion)
    throw DataError("unsupported dataset container version " + std::to_string(v));
  const auto n = in.u64(), d = in.u64(), c = in.u64();
  if (n > (1ULL << 32) || d > (1ULL << 20) || c > (1ULL << 20)) throw DataError("corrupt dataset dimensions");
  Dataset ds;
  for (std::uint64_t j = 0; j < d; ++j) ds.feature_names.push_back(in.str());
  for (std::uint64_t j = 0; j < c; ++j) ds.class_names.push_back(in.str());
  std::vector<double> x(n * d);
  for (auto& v : x) v = in.f64();
  ds.X = Matrix(n, d, std::move(x));
  ds.y.resize(n);
  for (auto& label : ds.y) label = static_cast<int>(in.u32());
  if (!in.done()) throw DataError("trailing bytes after dataset container");
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  bytes::write_file(path, encode_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) { return decode_dataset(bytes::read_file(path)); }

}  // namespace sdnguard::data
