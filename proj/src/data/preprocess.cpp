#include "sdnguard/data/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <set>

#include "sdnguard/errors.hpp"

namespace sdnguard::data {

namespace {

constexpr int kSchemaVersion = 1;

std::optional<double> parse_real(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

void check_schema(const nlohmann::json& j, std::string_view kind) {
  if (!j.is_object() || j.value("kind", "") != kind)
    throw DataError("expected a '" + std::string(kind) + "' document");
  if (j.value("schema_version", 0) != kSchemaVersion)
    throw DataError("unsupported schema_version for " + std::string(kind));
}

}  // namespace

const EncodingMap::Column& EncodingMap::column(std::string_view name) const {
  for (const auto& c : columns_)
    if (c.name == name) return c;
  throw DataError("encoding map has no column '" + std::string(name) + "'");
}

bool EncodingMap::has_column(std::string_view name) const {
  return std::any_of(columns_.begin(), columns_.end(), [&](const Column& c) { return c.name == name; });
}

int EncodingMap::encode(std::string_view column_name, std::string_view value) const {
  const auto& values = column(column_name).values;
  auto it = std::lower_bound(values.begin(), values.end(), value);
  if (it == values.end() || *it != value)
    throw DataError("value '" + std::string(value) + "' of column '" + std::string(column_name) +
                    "' was not seen when the encoding was fitted");
  return static_cast<int>(it - values.begin());
}

const std::string& EncodingMap::decode(std::string_view column_name, int id) const {
  const auto& values = column(column_name).values;
  if (id < 0 || static_cast<std::size_t>(id) >= values.size())
    throw DataError("code " + std::to_string(id) + " out of range for column '" + std::string(column_name) + "'");
  return values[static_cast<std::size_t>(id)];
}

nlohmann::json EncodingMap::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns_) cols.push_back({{"name", c.name}, {"values", c.values}});
  return {{"schema_version", kSchemaVersion}, {"kind", "encoding_map"}, {"columns", cols}};
}

EncodingMap EncodingMap::from_json(const nlohmann::json& j) {
  check_schema(j, "encoding_map");
  std::vector<Column> cols;
  for (const auto& c : j.at("columns")) {
    Column col{c.at("name").get<std::string>(), c.at("values").get<std::vector<std::string>>()};
    if (!std::is_sorted(col.values.begin(), col.values.end()) ||
        std::adjacent_find(col.values.begin(), col.values.end()) != col.values.end())
      throw DataError("encoding for column '" + col.name + "' is not strictly sorted");
    cols.push_back(std::move(col));
  }
  return EncodingMap(std::move(cols));
}

nlohmann::json PrepareReport::to_json() const {
  nlohmann::json ex = nlohmann::json::array();
  for (const auto& [row, col] : examples) ex.push_back({{"row", row}, {"column", col}});
  return {{"rows_in", rows_in}, {"rows_kept", rows_kept}, {"rows_dropped", rows_dropped}, {"dropped_examples", ex}};
}

Prepared prepare(const RawTable& raw, const PrepareOptions& opts) {
  for (const auto& name : opts.drop_columns)
    if (raw.find_column(name) == RawTable::npos) throw DataError("column to drop '" + name + "' not in header");
  for (const auto& name : opts.categorical_columns)
    if (raw.find_column(name) == RawTable::npos) throw DataError("categorical column '" + name + "' not in header");
  const std::size_t label_col = raw.find_column(opts.label_column);
  if (label_col == RawTable::npos) throw DataError("label column '" + opts.label_column + "' missing");
  if (contains(opts.drop_columns, opts.label_column)) throw UsageError("the label column cannot be dropped");

  struct FeatureCol {
    std::size_t source;
    bool categorical;
  };
  std::vector<FeatureCol> features;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < raw.n_cols(); ++c) {
    const auto& name = raw.column_names()[c];
    if (c == label_col || contains(opts.drop_columns, name)) continue;
    features.push_back({c, contains(opts.categorical_columns, name)});
    feature_names.push_back(name);
  }

  Prepared out;
  out.report.rows_in = raw.n_rows();
  const std::size_t d = features.size();
  std::vector<double> values;
  values.reserve(raw.n_rows() * d);
  std::vector<std::size_t> kept_rows;
  std::vector<double> row(d);
  for (std::size_t r = 0; r < raw.n_rows(); ++r) {
    bool ok = true;
    for (std::size_t j = 0; j < d && ok; ++j) {
      if (features[j].categorical) continue;
      auto v = parse_real(raw.cell(r, features[j].source));
      if (!v) {
        ok = false;
        if (out.report.examples.size() < 10) out.report.examples.emplace_back(r, feature_names[j]);
      } else {
        row[j] = *v;
      }
    }
    if (!ok) {
      ++out.report.rows_dropped;
      continue;
    }
    kept_rows.push_back(r);
    values.insert(values.end(), row.begin(), row.end());
  }
  out.report.rows_kept = kept_rows.size();

  // Encodings are fitted on the rows that survive filtering.
  std::vector<EncodingMap::Column> enc_cols;
  auto fit_column = [&](std::size_t source) {
    std::set<std::string, std::less<>> distinct;
    for (auto r : kept_rows) distinct.emplace(raw.cell(r, source));
    return EncodingMap::Column{raw.column_names()[source], {distinct.begin(), distinct.end()}};
  };
  for (const auto& f : features)
    if (f.categorical) enc_cols.push_back(fit_column(f.source));
  enc_cols.push_back(fit_column(label_col));
  out.encoding = EncodingMap(std::move(enc_cols));

  for (std::size_t j = 0; j < d; ++j) {
    if (!features[j].categorical) continue;
    for (std::size_t i = 0; i < kept_rows.size(); ++i)
      values[i * d + j] = out.encoding.encode(feature_names[j], raw.cell(kept_rows[i], features[j].source));
  }

  auto& ds = out.dataset;
  ds.X = Matrix(kept_rows.size(), d, std::move(values));
  ds.feature_names = std::move(feature_names);
  ds.class_names = out.encoding.column(opts.label_column).values;
  ds.y.reserve(kept_rows.size());
  for (auto r : kept_rows) ds.y.push_back(out.encoding.encode(opts.label_column, raw.cell(r, label_col)));
  return out;
}

nlohmann::json ScalerParams::to_json() const {
  nlohmann::json feats = nlohmann::json::array();
  for (std::size_t j = 0; j < mean.size(); ++j)
    feats.push_back({{"name", feature_names[j]}, {"mean", mean[j]}, {"stddev", stddev[j]}});
  return {{"schema_version", kSchemaVersion},
          {"kind", "scaler_params"},
          {"stddev_convention", "population"},
          {"features", feats}};
}

ScalerParams ScalerParams::from_json(const nlohmann::json& j) {
  check_schema(j, "scaler_params");
  ScalerParams p;
  for (const auto& f : j.at("features")) {
    p.feature_names.push_back(f.at("name").get<std::string>());
    p.mean.push_back(f.at("mean").get<double>());
    p.stddev.push_back(f.at("stddev").get<double>());
    if (!(p.stddev.back() >= 0.0)) throw DataError("negative stddev in scaler params");
  }
  return p;
}

ScalerParams fit_scaler(const Dataset& train) {
  const std::size_t n = train.n_rows(), d = train.n_features();
  if (n == 0) throw DataError("cannot fit a scaler on an empty dataset");
  ScalerParams p;
  p.feature_names = train.feature_names;
  p.mean.assign(d, 0.0);
  p.stddev.assign(d, 0.0);
  // Two-pass for accuracy on large-magnitude flow counters.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) p.mean[j] += train.X(i, j);
  for (auto& m : p.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = train.X(i, j) - p.mean[j];
      p.stddev[j] += dev * dev;
    }
  for (auto& s : p.stddev) s = std::sqrt(s / static_cast<double>(n));
  return p;
}

Dataset apply_scaler(const ScalerParams& params, const Dataset& ds) {
  if (params.mean.size() != ds.n_features())
    throw DataError("scaler fitted on " + std::to_string(params.mean.size()) + " features, dataset has " +
                    std::to_string(ds.n_features()));
  Dataset out = ds;
  for (std::size_t i = 0; i < out.n_rows(); ++i) {
    auto row = out.X.row(i);
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = params.stddev[j] > 0.0 ? (row[j] - params.mean[j]) / params.stddev[j] : 0.0;
  }
  return out;
}

}  // namespace sdnguard::data
