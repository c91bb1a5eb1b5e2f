#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "semran/codec/codec.hpp"

// Layout (all integers and floats little-endian):
//   bytes 0..3   magic "SRCK"
//   u32          format version (1)
//   u32 d, u32 D
//   u64 version, u64 parent_version
//   f64 W[d*D], b[d], Phi[D*d], c[D]   (row-major)
namespace semran::codec {

constexpr std::uint32_t kCheckpointFormat = 1;

std::vector<std::uint8_t> serialize(const CodecParams& p);
CodecParams deserialize(const std::vector<std::uint8_t>& bytes);
std::uint64_t hash_bytes(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const CodecParams& p, const std::filesystem::path& path);
CodecParams load_checkpoint(const std::filesystem::path& path);

}  // namespace semran::codec
