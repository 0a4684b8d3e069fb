#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "sdq/params.hpp"

namespace sdq {

/// Versioned binary checkpoint: "SDQC", u16 version, JSON metadata header,
/// Adam step counter, dropout RNG state, then every named tensor with its
/// shape and little-endian float32 values followed by the Adam moments.
struct Checkpoint {
  ParamSet<float> params;
  nlohmann::json metadata = nlohmann::json::object();
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const ParamSet<float>& params, const nlohmann::json& metadata);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const ParamSet<float>& params, const nlohmann::json& metadata);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sdq
