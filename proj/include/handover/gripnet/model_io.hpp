#pragma once

// Binary model file:
//   8 bytes magic "HOVAELS\0", u32 format version,
//   u32 input / hidden / latent / window sizes, u64 parameter count,
//   f64 channel means[3], f64 channel stds[3], f64 parameters[count],
//   u32 CRC-32 of all preceding bytes.
// Integers and floats are little-endian; parameters follow
// VaeLstmModel::visit order.

#include "handover/gripnet/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace handover::gripnet {

inline constexpr std::uint32_t kModelFormatVersion = 1;

std::string serialize(const VaeLstmModel& model);
// Throws Error(Format) on damaged input, Error(Incompatible) on a version or
// architecture mismatch.
VaeLstmModel deserialize(const std::string& bytes);

void save_model(const VaeLstmModel& model, const std::filesystem::path& path);
VaeLstmModel load_model(const std::filesystem::path& path);

}  // namespace handover::gripnet
