#include "sdnguard/archive.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "sdnguard/errors.hpp"

namespace sdnguard {
namespace bytes {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::string& out, std::string_view s) {
  put_u64(out, s.size());
  out.append(s);
}

std::string_view Reader::take(std::size_t n) {
  if (n > data_.size() - pos_) throw DataError("truncated binary container");
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t Reader::u8() { return static_cast<std::uint8_t>(take(1)[0]); }

std::uint32_t Reader::u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

std::uint64_t Reader::u64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string Reader::str() {
  auto n = u64();
  return std::string(take(n));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace bytes

namespace {

constexpr char kMagic[4] = {'S', 'D', 'G', 'M'};
constexpr std::uint32_t kVersion = 1;

enum Kind : std::uint8_t { kReals = 1, kInts = 2, kText = 3, kRecord = 4 };

}  // namespace

void Record::write_body(std::string& out) const {
  bytes::put_str(out, type_);
  bytes::put_u32(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [key, value] : entries_) {
    bytes::put_str(out, key);
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::vector<double>>) {
            bytes::put_u8(out, kReals);
            bytes::put_u64(out, v.size());
            for (double x : v) bytes::put_f64(out, x);
          } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
            bytes::put_u8(out, kInts);
            bytes::put_u64(out, v.size());
            for (auto x : v) bytes::put_u64(out, static_cast<std::uint64_t>(x));
          } else if constexpr (std::is_same_v<T, std::string>) {
            bytes::put_u8(out, kText);
            bytes::put_str(out, v);
          } else {
            bytes::put_u8(out, kRecord);
            v.write_body(out);
          }
        },
        value);
  }
}

void Record::put(std::string key, std::vector<double> v) { entries_.emplace_back(std::move(key), std::move(v)); }
void Record::put(std::string key, std::vector<std::int64_t> v) { entries_.emplace_back(std::move(key), std::move(v)); }
void Record::put(std::string key, std::string v) { entries_.emplace_back(std::move(key), std::move(v)); }
void Record::put(std::string key, Record v) { entries_.emplace_back(std::move(key), std::move(v)); }

bool Record::has(std::string_view key) const {
  for (const auto& e : entries_)
    if (e.first == key) return true;
  return false;
}

const Record::Value& Record::find(std::string_view key) const {
  for (const auto& e : entries_)
    if (e.first == key) return e.second;
  throw DataError("model record '" + type_ + "' lacks field '" + std::string(key) + "'");
}

template <typename T>
static const T& get_as(const Record::Value& v, std::string_view key) {
  if (auto* p = std::get_if<T>(&v)) return *p;
  throw DataError("model field '" + std::string(key) + "' has the wrong kind");
}

const std::vector<double>& Record::reals(std::string_view key) const {
  return get_as<std::vector<double>>(find(key), key);
}
const std::vector<std::int64_t>& Record::ints(std::string_view key) const {
  return get_as<std::vector<std::int64_t>>(find(key), key);
}
const std::string& Record::text(std::string_view key) const { return get_as<std::string>(find(key), key); }
const Record& Record::child(std::string_view key) const { return get_as<Record>(find(key), key); }

double Record::real(std::string_view key) const {
  const auto& v = reals(key);
  if (v.size() != 1) throw DataError("model field '" + std::string(key) + "' is not a scalar");
  return v[0];
}

std::int64_t Record::integer(std::string_view key) const {
  const auto& v = ints(key);
  if (v.size() != 1) throw DataError("model field '" + std::string(key) + "' is not a scalar");
  return v[0];
}

void Record::expect_type(std::string_view expected) const {
  if (type_ != expected)
    throw DataError("expected a '" + std::string(expected) + "' model, found '" + type_ + "'");
}

std::string Record::serialize() const {
  std::string out(kMagic, 4);
  bytes::put_u32(out, kVersion);
  bytes::put_u32(out, 0);  // reserved
  write_body(out);
  return out;
}

static Record read_record(bytes::Reader& in, int depth) {
  if (depth > 64) throw DataError("model container nests too deeply");
  Record r(in.str());
  const auto n = in.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto key = in.str();
    switch (in.u8()) {
      case kReals: {
        auto count = in.u64();
        if (count > (1ULL << 40)) throw DataError("corrupt array length");
        std::vector<double> v(count);
        for (auto& x : v) x = in.f64();
        r.put(std::move(key), std::move(v));
        break;
      }
      case kInts: {
        auto count = in.u64();
        if (count > (1ULL << 40)) throw DataError("corrupt array length");
        std::vector<std::int64_t> v(count);
        for (auto& x : v) x = static_cast<std::int64_t>(in.u64());
        r.put(std::move(key), std::move(v));
        break;
      }
      case kText:
        r.put(std::move(key), in.str());
        break;
      case kRecord:
        r.put(std::move(key), read_record(in, depth + 1));
        break;
      default:
        throw DataError("unknown entry kind in model container");
    }
  }
  return r;
}

Record Record::deserialize(std::string_view data) {
  bytes::Reader in(data);
  auto magic = in.take(4);
  if (magic != std::string_view(kMagic, 4)) throw DataError("not a model container (bad magic)");
  auto version = in.u32();
  if (version != kVersion) throw DataError("unsupported model container version " + std::to_string(version));
  in.u32();
  auto r = read_record(in, 0);
  if (!in.done()) throw DataError("trailing bytes after model container");
  return r;
}

void Record::save(const std::filesystem::path& path) const { bytes::write_file(path, serialize()); }

Record Record::load(const std::filesystem::path& path) { return deserialize(bytes::read_file(path)); }

}  // namespace sdnguard
