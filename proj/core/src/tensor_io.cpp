#include "mfcm/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "mfcm/error.hpp"

namespace mfcm {
namespace {

template <typename U>
void put_le(std::ostream& out, U value) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes, sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw FormatError("MFCT stream ended early");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t, DType dtype) {
  if (t.rank() > std::numeric_limits<std::uint8_t>::max()) throw FormatError("rank too large");
  out.write("MFCT", 4);
  put_le<std::uint8_t>(out, kMfctVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw FormatError("dimension too large");
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  }
  for (double v : t.data()) {
    if (dtype == DType::Float32) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  if (!out) throw IoError("MFCT write failed");
}

Tensor read_tensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MFCT", 4) != 0) {
    throw FormatError("missing MFCT magic");
  }
  const auto version = get_le<std::uint8_t>(in);
  if (version != kMfctVersion) throw FormatError("unsupported MFCT version " + std::to_string(version));
  const auto dtype = get_le<std::uint8_t>(in);
  if (dtype != static_cast<std::uint8_t>(DType::Float32) &&
      dtype != static_cast<std::uint8_t>(DType::Float64)) {
    throw FormatError("unknown MFCT dtype " + std::to_string(dtype));
  }
  const auto rank = get_le<std::uint8_t>(in);
  Shape shape(rank);
  for (auto& d : shape) d = get_le<std::uint32_t>(in);
  if (shape_numel(shape) > (std::size_t{1} << 31)) throw FormatError("MFCT tensor implausibly large");

  Tensor t(shape);
  for (double& v : t.data()) {
    if (dtype == static_cast<std::uint8_t>(DType::Float32)) {
      v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in)));
    } else {
      v = std::bit_cast<double>(get_le<std::uint64_t>(in));
    }
  }
  return t;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t, DType dtype) {
  std::ostringstream out(std::ios::binary);
  write_tensor(out, t, dtype);
  const std::string s = out.str();
  return {s.begin(), s.end()};
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  std::istringstream in(std::string(bytes.begin(), bytes.end()), std::ios::binary);
  return read_tensor(in);
}

void save_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_tensor(out, t, dtype);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace mfcm
