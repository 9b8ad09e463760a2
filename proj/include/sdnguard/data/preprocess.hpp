#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdnguard/data/csv.hpp"
#include "sdnguard/data/dataset.hpp"

namespace sdnguard::data {

/// Per categorical column, distinct values in lexicographic order; a value's
/// id is its position.
class EncodingMap {
 public:
  struct Column {
    std::string name;
    std::vector<std::string> values;
  };

  EncodingMap() = default;
  explicit EncodingMap(std::vector<Column> columns) : columns_(std::move(columns)) {}

  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::string_view name) const;
  bool has_column(std::string_view name) const;

  /// Throws DataError for values not seen at fit time.
  int encode(std::string_view column, std::string_view value) const;
  const std::string& decode(std::string_view column, int id) const;

  nlohmann::json to_json() const;
  static EncodingMap from_json(const nlohmann::json& j);

 private:
  std::vector<Column> columns_;
};

struct PrepareOptions {
  std::vector<std::string> drop_columns{"Timestamp"};
  std::vector<std::string> categorical_columns{"Flow ID", "Src IP", "Dst IP", "Label"};
  std::string label_column = "Label";
};

struct PrepareReport {
  std::size_t rows_in = 0;
  std::size_t rows_kept = 0;
  std::size_t rows_dropped = 0;
  /// First few offending (data row, column) pairs, for the log.
  std::vector<std::pair<std::size_t, std::string>> examples;

  nlohmann::json to_json() const;
};

struct Prepared {
  Dataset dataset;
  EncodingMap encoding;
  PrepareReport report;
};

/// Drops listed columns, label-encodes categorical ones (label included),
/// parses the rest as reals and discards rows holding unparseable or
/// non-finite numeric cells.
Prepared prepare(const RawTable& raw, const PrepareOptions& opts);

/// Population mean / stddev per feature.
struct ScalerParams {
  std::vector<std::string> feature_names;
  std::vector<double> mean;
  std::vector<double> stddev;

  nlohmann::json to_json() const;
  static ScalerParams from_json(const nlohmann::json& j);
};

ScalerParams fit_scaler(const Dataset& train);

/// Zero-variance features map to 0. Throws DataError on width mismatch.
Dataset apply_scaler(const ScalerParams& params, const Dataset& ds);

}  // namespace sdnguard::data
