#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dgcrf/model.hpp"

namespace dgcrf {

inline constexpr char kModelMagic[6] = {'D', 'G', 'C', 'R', 'F', '1'};
inline constexpr std::uint32_t kModelVersion = 1;

enum ModelFlags : std::uint32_t {
  kFlagShareBank = 1,
  kFlagShareBias = 2,
  kFlagCascade = 4,
  kFlagSoftmaxNormalized = 8,
};

// Layout (little-endian): magic, u32 version, d, K, T, flags, T f64 β
// multipliers; then f64 payload: per bank P_1..P_K and R_1..R_K as full
// row-major d²×d² matrices followed by b; then per-layer bias vectors.
std::size_t model_header_bytes(int T);
std::size_t model_payload_count(const NetworkConfig& config);

std::vector<unsigned char> encode_model(const Model& model);
Model decode_model(const std::vector<unsigned char>& bytes);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace dgcrf
