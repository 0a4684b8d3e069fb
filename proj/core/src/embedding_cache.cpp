#include <cstring>
#include <mutex>

#include <fmt/format.h>
#include <openssl/sha.h>
#include <zlib.h>

#include "sdq/binary_io.hpp"
#include "sdq/embed.hpp"

namespace sdq {

namespace {
constexpr char kMagic[4] = {'S', 'D', 'Q', 'E'};
}

EmbeddingCache::TextKey EmbeddingCache::hash_text(std::string_view text) {
  TextKey key{};
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), key.data());
  return key;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path path, std::size_t dimension)
    : path_(std::move(path)), dim_(dimension) {
  if (dim_ == 0 || dim_ > 0xFFFF) throw ValidationError("embedding cache: dimension must be in [1, 65535]");
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  if (std::filesystem::exists(path_) && std::filesystem::file_size(path_) > 0) {
    load();
  } else {
    std::ofstream init(path_, std::ios::binary | std::ios::trunc);
    if (!init) throw IoError("cannot create embedding cache " + path_.string());
    init.write(kMagic, 4);
    io::write_u16(init, kVersion);
    io::write_u16(init, static_cast<std::uint16_t>(dim_));
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw IoError("cannot open embedding cache " + path_.string() + " for appending");
}

void EmbeddingCache::load() {
  const std::string data = io::read_file(path_);
  if (data.size() < kHeaderBytes || std::memcmp(data.data(), kMagic, 4) != 0) {
    throw IoError(path_.string() + ": not an embedding cache (bad magic)");
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  const std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  const std::uint16_t dim = static_cast<std::uint16_t>(bytes[6] | (bytes[7] << 8));
  if (version != kVersion) throw IoError(fmt::format("{}: unsupported cache version {}", path_.string(), version));
  if (dim != dim_) {
    throw IoError(fmt::format("{}: cache dimension {} does not match requested {}", path_.string(), dim, dim_));
  }
  const std::size_t rec = record_bytes(dim_);
  std::size_t offset = kHeaderBytes;
  for (; offset + rec <= data.size(); offset += rec) {
    const unsigned char* r = bytes + offset;
    const std::size_t body = rec - 4;
    const auto crc = static_cast<std::uint32_t>(crc32(0L, r, static_cast<uInt>(body)));
    if (crc != io::decode_u32(r + body)) {
      problems_.push_back(fmt::format("checksum mismatch in record at byte offset {}", offset));
      continue;
    }
    Key key{};
    std::memcpy(key.text.data(), r, 32);
    key.provider = io::decode_u64(r + 32);
    EmbeddingVector v(dim_);
    for (std::size_t j = 0; j < dim_; ++j) v[j] = io::decode_f32(r + 40 + 4 * j);
    entries_[key] = std::move(v);
  }
  if (offset != data.size()) {
    problems_.push_back(fmt::format("truncated record at byte offset {} ignored", offset));
  }
}

std::optional<EmbeddingVector> EmbeddingCache::get(std::uint64_t provider_id, std::string_view text) const {
  const Key key{hash_text(text), provider_id};
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(std::uint64_t provider_id, std::string_view text, const EmbeddingVector& vector) {
  if (vector.size() != dim_) {
    throw ValidationError(fmt::format("embedding cache: vector dimension {} != {}", vector.size(), dim_));
  }
  const Key key{hash_text(text), provider_id};
  std::string rec(record_bytes(dim_), '\0');
  auto* r = reinterpret_cast<unsigned char*>(rec.data());
  std::memcpy(r, key.text.data(), 32);
  io::encode_u64(provider_id, r + 32);
  for (std::size_t j = 0; j < dim_; ++j) io::encode_f32(vector[j], r + 40 + 4 * j);
  const std::size_t body = rec.size() - 4;
  io::encode_u32(static_cast<std::uint32_t>(crc32(0L, r, static_cast<uInt>(body))), r + body);

  std::unique_lock lock(mutex_);
  out_.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  out_.flush();
  if (!out_) throw IoError("embedding cache: write failed for " + path_.string());
  entries_[key] = vector;
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace sdq
