#include "sdnguard/data/csv.hpp"

#include <fstream>
#include <istream>
#include <unordered_set>

#include "sdnguard/errors.hpp"

namespace sdnguard::data {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

RawTable::RawTable(std::vector<std::string> column_names) : columns_(std::move(column_names)) {
  std::unordered_set<std::string> seen;
  for (const auto& c : columns_)
    if (!seen.insert(c).second) throw DataError("duplicate column name '" + c + "'");
}

std::size_t RawTable::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i] == name) return i;
  return npos;
}

void RawTable::add_row(const std::vector<std::string>& cells, std::size_t line_no) {
  if (cells.size() != columns_.size())
    throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns_.size()) +
                    " cells, found " + std::to_string(cells.size()));
  for (const auto& c : cells) {
    text_ += c;
    ends_.push_back(text_.size());
  }
  ++n_rows_;
}

bool CsvReader::next(std::vector<std::string>& cells) {
  cells.clear();
  int ch = in_.get();
  if (ch == EOF) return false;
  record_line_ = line_;
  std::string cell;
  bool quoted = false;
  bool was_quoted = false;
  for (;; ch = in_.get()) {
    if (ch == EOF) {
      if (quoted) throw DataError("line " + std::to_string(record_line_) + ": unterminated quoted field");
      cells.push_back(std::move(cell));
      return true;
    }
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get();
          cell.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_;
        cell.push_back(c);
      }
      continue;
    }
    if (c == '"' && cell.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
      was_quoted = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && in_.peek() == '\n') in_.get();
      ++line_;
      cells.push_back(std::move(cell));
      return true;
    } else {
      cell.push_back(c);
    }
  }
}

RawTable read_csv(std::istream& in, const std::string& source_name) {
  CsvReader reader(in);
  std::vector<std::string> cells;
  if (!reader.next(cells)) throw DataError(source_name + ": empty file");
  if (!cells.empty() && cells[0].starts_with("\xEF\xBB\xBF")) cells[0].erase(0, 3);
  std::vector<std::string> header;
  for (const auto& c : cells) header.push_back(trim(c));
  RawTable table(std::move(header));
  while (reader.next(cells)) {
    if (cells.size() == 1 && cells[0].empty()) continue;  // blank line
    try {
      table.add_row(cells, reader.record_line());
    } catch (const DataError& e) {
      throw DataError(source_name + ": " + e.what());
    }
  }
  return table;
}

RawTable load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_csv(in, path.string());
}

std::string csv_escape(std::string_view cell) {
  if (cell.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace sdnguard::data
