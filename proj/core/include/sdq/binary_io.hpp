#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace sdq::io {

// Little-endian primitive writers/readers for the versioned binary formats
// (checkpoints, embedding cache, LDA models).
void write_u8(std::ostream& out, std::uint8_t v);
void write_u16(std::ostream& out, std::uint16_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_string(std::ostream& out, std::string_view s);  // u32 length + bytes
void write_f32_array(std::ostream& out, std::span<const float> values);

std::uint8_t read_u8(std::istream& in);
std::uint16_t read_u16(std::istream& in);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);
std::string read_string(std::istream& in);
void read_f32_array(std::istream& in, std::span<float> values);

void encode_u32(std::uint32_t v, unsigned char* dst);
std::uint32_t decode_u32(const unsigned char* src);
void encode_u64(std::uint64_t v, unsigned char* dst);
std::uint64_t decode_u64(const unsigned char* src);
void encode_f32(float v, unsigned char* dst);
float decode_f32(const unsigned char* src);

// Writes `contents` to a sibling temp file then renames over `path`, so
// readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace sdq::io
