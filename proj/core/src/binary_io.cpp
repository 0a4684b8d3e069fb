#include "sdq/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sdq/error.hpp"

namespace sdq::io {
namespace {

void put_bytes(std::ostream& out, const unsigned char* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out) throw IoError("binary write failed");
}

void get_bytes(std::istream& in, unsigned char* p, std::size_t n) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) throw IoError("unexpected end of binary stream");
}

}  // namespace

void encode_u32(std::uint32_t v, unsigned char* dst) {
  for (int i = 0; i < 4; ++i) dst[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint32_t decode_u32(const unsigned char* src) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(src[i]) << (8 * i);
  return v;
}

void encode_u64(std::uint64_t v, unsigned char* dst) {
  for (int i = 0; i < 8; ++i) dst[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t decode_u64(const unsigned char* src) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(src[i]) << (8 * i);
  return v;
}

void encode_f32(float v, unsigned char* dst) { encode_u32(std::bit_cast<std::uint32_t>(v), dst); }
float decode_f32(const unsigned char* src) { return std::bit_cast<float>(decode_u32(src)); }

void write_u8(std::ostream& out, std::uint8_t v) { put_bytes(out, &v, 1); }

void write_u16(std::ostream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  put_bytes(out, b, 2);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  encode_u32(v, b);
  put_bytes(out, b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  encode_u64(v, b);
  put_bytes(out, b, 8);
}

void write_f32(std::ostream& out, float v) { write_u32(out, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

void write_string(std::ostream& out, std::string_view s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, reinterpret_cast<const unsigned char*>(s.data()), s.size());
}

void write_f32_array(std::ostream& out, std::span<const float> values) {
  std::string buf(values.size() * 4, '\0');
  auto* p = reinterpret_cast<unsigned char*>(buf.data());
  for (std::size_t i = 0; i < values.size(); ++i) encode_f32(values[i], p + 4 * i);
  put_bytes(out, p, buf.size());
}

std::uint8_t read_u8(std::istream& in) {
  unsigned char b;
  get_bytes(in, &b, 1);
  return b;
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  get_bytes(in, b, 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  get_bytes(in, b, 4);
  return decode_u32(b);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  get_bytes(in, b, 8);
  return decode_u64(b);
}

float read_f32(std::istream& in) { return std::bit_cast<float>(read_u32(in)); }
double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

std::string read_string(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  std::string s(n, '\0');
  get_bytes(in, reinterpret_cast<unsigned char*>(s.data()), n);
  return s;
}

void read_f32_array(std::istream& in, std::span<float> values) {
  std::string buf(values.size() * 4, '\0');
  auto* p = reinterpret_cast<unsigned char*>(buf.data());
  get_bytes(in, p, buf.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = decode_f32(p + 4 * i);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

}  // namespace sdq::io
