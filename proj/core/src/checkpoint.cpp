#include "sdq/checkpoint.hpp"

#include <cstring>
#include <sstream>

#include <fmt/format.h>

#include "sdq/binary_io.hpp"
#include "sdq/error.hpp"

namespace sdq {

namespace {
constexpr char kMagic[4] = {'S', 'D', 'Q', 'C'};

void write_tensor(std::ostream& out, const Tensor<float>& t) { io::write_f32_array(out, t.values()); }
}  // namespace

std::string serialize_checkpoint(const ParamSet<float>& params, const nlohmann::json& metadata) {
  std::ostringstream out(std::ios::binary);
  out.write(kMagic, 4);
  io::write_u16(out, kCheckpointVersion);
  io::write_string(out, metadata.dump());
  io::write_u64(out, params.step);
  io::write_u64(out, params.rng.state());
  io::write_u32(out, static_cast<std::uint32_t>(params.parameters().size()));
  for (const auto& p : params.parameters()) {
    io::write_string(out, p.name);
    io::write_u8(out, static_cast<std::uint8_t>(p.value.shape().size()));
    for (std::size_t d : p.value.shape()) io::write_u32(out, static_cast<std::uint32_t>(d));
    write_tensor(out, p.value);
    write_tensor(out, p.m);
    write_tensor(out, p.v);
  }
  return std::move(out).str();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  std::istringstream in(std::string(bytes), std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a checkpoint (bad magic)");
  const auto version = io::read_u16(in);
  if (version != kCheckpointVersion) throw IoError(fmt::format("unsupported checkpoint version {}", version));
  Checkpoint ck;
  try {
    ck.metadata = nlohmann::json::parse(io::read_string(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("checkpoint metadata is not valid JSON: {}", e.what()));
  }
  ck.params.step = io::read_u64(in);
  ck.params.rng.set_state(io::read_u64(in));
  const auto count = io::read_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = io::read_string(in);
    const auto rank = io::read_u8(in);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = io::read_u32(in);
    Tensor<float> value(shape);
    io::read_f32_array(in, value.values());
    auto& p = ck.params.add(std::move(name), std::move(value));
    io::read_f32_array(in, p.m.values());
    io::read_f32_array(in, p.v.values());
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes after checkpoint payload");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ParamSet<float>& params, const nlohmann::json& metadata) {
  io::write_file_atomic(path, serialize_checkpoint(params, metadata));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return deserialize_checkpoint(io::read_file(path));
  } catch (const IoError& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace sdq
