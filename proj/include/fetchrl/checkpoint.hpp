#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fetchrl/optimizer.hpp"
#include "fetchrl/policy.hpp"

namespace fetchrl {

inline constexpr char kCheckpointMagic[8] = {'F', 'E', 'T', 'C', 'H', 'R', 'L', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers and reals little-endian:
///   magic[8] "FETCHRL\0"
///   u32 format version
///   i32 input_channels, window, hidden_units, context_units, action_count
///   u32 conv layer count, then per layer i32 out_channels, kernel, stride
///   u64 parameter count, then that many f64
///   u8  optimizer flag; if 1: i64 step, u64 n, n f64 first moments,
///       n f64 second moments
struct Checkpoint {
  PolicyParams params;
  std::optional<AdamState> optimizer;
  std::uint32_t version = kCheckpointVersion;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string describe(const NetworkSpec& spec);

}  // namespace fetchrl
