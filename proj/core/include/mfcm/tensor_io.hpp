#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mfcm/tensor.hpp"

namespace mfcm {

// MFCT binary tensor layout, all little endian:
//   "MFCT" | version u8 (0x01) | dtype u8 | rank u8 | rank x u32 dims | payload
// dtype 0x01 = float32, 0x02 = float64; payload is row-major.
enum class DType : std::uint8_t { Float32 = 0x01, Float64 = 0x02 };

inline constexpr std::uint8_t kMfctVersion = 0x01;

void write_tensor(std::ostream& out, const Tensor& t, DType dtype = DType::Float64);
// Throws FormatError on bad magic, version, dtype or a short payload.
Tensor read_tensor(std::istream& in);

std::vector<std::uint8_t> encode_tensor(const Tensor& t, DType dtype = DType::Float64);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void save_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype = DType::Float64);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace mfcm
