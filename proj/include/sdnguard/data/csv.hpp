#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sdnguard::data {

/// Parsed CSV body. Cells live in one text buffer addressed by offsets, which
/// keeps a 300k x 84 flow table to a few hundred megabytes.
class RawTable {
 public:
  explicit RawTable(std::vector<std::string> column_names);

  const std::vector<std::string>& column_names() const { return columns_; }
  std::size_t n_cols() const { return columns_.size(); }
  std::size_t n_rows() const { return n_rows_; }

  /// Index of a column, or npos.
  std::size_t find_column(std::string_view name) const;

  std::string_view cell(std::size_t row, std::size_t col) const {
    const std::size_t k = row * columns_.size() + col;
    const std::uint64_t begin = k == 0 ? 0 : ends_[k - 1];
    return std::string_view(text_).substr(begin, ends_[k] - begin);
  }

  /// Throws DataError when cells.size() != n_cols().
  void add_row(const std::vector<std::string>& cells, std::size_t line_no = 0);

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::string> columns_;
  std::string text_;
  std::vector<std::uint64_t> ends_;
  std::size_t n_rows_ = 0;
};

/// Incremental RFC-4180 reader: quoted fields, doubled quotes, embedded
/// newlines, LF or CRLF endings.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next record into cells; false at end of input.
  bool next(std::vector<std::string>& cells);

  /// Physical line on which the last returned record started (1-based).
  std::size_t record_line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

RawTable read_csv(std::istream& in, const std::string& source_name = "<stream>");
RawTable load_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view cell);

}  // namespace sdnguard::data
