#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace sdnguard {

/// Typed key/value record behind every serialized model.
///
/// Byte layout (all integers little-endian):
///   file   := "SDGM" u32(version=1) u32(reserved=0) record
///   record := str(type_tag) u32(n_entries) entry*
///   entry  := str(key) u8(kind) payload
///   kind 1 := u64(n) f64[n]      kind 2 := u64(n) i64[n]
///   kind 3 := str                kind 4 := record
///   str    := u64(len) bytes
class Record {
 public:
  using Value = std::variant<std::vector<double>, std::vector<std::int64_t>, std::string, Record>;

  Record() = default;
  explicit Record(std::string type) : type_(std::move(type)) {}

  const std::string& type() const { return type_; }

  void put(std::string key, std::vector<double> v);
  void put(std::string key, std::vector<std::int64_t> v);
  void put(std::string key, std::string v);
  void put(std::string key, Record v);
  void put_real(std::string key, double v) { put(std::move(key), std::vector<double>{v}); }
  void put_int(std::string key, std::int64_t v) {
    put(std::move(key), std::vector<std::int64_t>{v});
  }

  bool has(std::string_view key) const;
  const std::vector<double>& reals(std::string_view key) const;
  const std::vector<std::int64_t>& ints(std::string_view key) const;
  const std::string& text(std::string_view key) const;
  const Record& child(std::string_view key) const;
  double real(std::string_view key) const;
  std::int64_t integer(std::string_view key) const;

  /// Throws DataError unless type() == expected.
  void expect_type(std::string_view expected) const;

  std::string serialize() const;
  static Record deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static Record load(const std::filesystem::path& path);

 private:
  const Value& find(std::string_view key) const;
  void write_body(std::string& out) const;

  std::string type_;
  std::vector<std::pair<std::string, Value>> entries_;
};

namespace bytes {

void put_u8(std::string& out, std::uint8_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f64(std::string& out, double v);
void put_str(std::string& out, std::string_view s);

/// Bounds-checked little-endian reader; overruns raise DataError.
class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  std::string_view take(std::size_t n);
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace bytes
}  // namespace sdnguard
