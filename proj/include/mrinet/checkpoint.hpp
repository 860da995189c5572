#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mrinet/model.hpp"
#include "mrinet/tensor.hpp"

namespace mrinet {

// .nnck layout, little-endian:
//   "NNCK"  u32 version(=1)  u32 tensor_count
//   per tensor: u16 name_len, name bytes (UTF-8), u8 ndim, u32 dims[ndim],
//               f32 values[prod(dims)]
//   u32 CRC-32 (IEEE) of every preceding byte

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;

  bool operator==(const NamedTensor&) const = default;
};

using WeightTable = std::vector<NamedTensor>;

std::vector<std::uint8_t> encode_checkpoint(const WeightTable& table);

/// Verifies magic, version, CRC and framing, in that order.
/// Throws BadMagic, BadVersion, ChecksumMismatch, Truncated.
WeightTable decode_checkpoint(std::span<const std::uint8_t> bytes);

WeightTable export_weights(const Model& model);

/// Copies `table` into the model. Every model tensor must be present with an
/// identical shape; throws ShapeMismatch naming the first offending tensor.
void import_weights(Model& model, const WeightTable& table);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
void save_checkpoint(const WeightTable& table, const std::filesystem::path& path);
WeightTable load_checkpoint(const std::filesystem::path& path);

/// CRC-32 as stored in the trailer.
std::uint32_t checkpoint_crc(std::span<const std::uint8_t> bytes);

}  // namespace mrinet
