#include "mfcm/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mfcm/error.hpp"
#include "mfcm/tensor_io.hpp"

namespace mfcm {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("checkpoint ended early");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string read_bytes(std::istream& in, std::uint32_t n) {
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw FormatError("checkpoint ended early");
  return s;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(MfcmNet& model, const DspConfig& dsp) {
  const nlohmann::json header{{"dsp", nlohmann::json::parse(to_json(dsp))},
                              {"model", nlohmann::json::parse(to_json(model.config()))}};
  const std::string text = header.dump();
  const auto tensors = model.named_tensors();

  std::ostringstream out(std::ios::binary);
  out.write("MFCK", 4);
  out.put(static_cast<char>(kCheckpointVersion));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(out, t, DType::Float64);
  }
  const std::string s = out.str();
  return {s.begin(), s.end()};
}

void save_checkpoint(const std::filesystem::path& path, MfcmNet& model, const DspConfig& dsp) {
  const auto bytes = encode_checkpoint(model, dsp);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  std::istringstream in(std::string(bytes.begin(), bytes.end()), std::ios::binary);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MFCK", 4) != 0) {
    throw FormatError("missing MFCK magic");
  }
  const int version = in.get();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version");

  const std::string text = read_bytes(in, get_u32(in));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not JSON: ") + e.what());
  }
  if (!header.is_object() || !header.contains("dsp") || !header.contains("model")) {
    throw FormatError("checkpoint header lacks dsp/model sections");
  }
  LoadedCheckpoint loaded{parse_dsp_config(header.at("dsp").dump()),
                          MfcmNet(parse_model_config(header.at("model").dump()))};

  auto expected = loaded.model.named_tensors();
  const std::uint32_t count = get_u32(in);
  if (count != expected.size()) {
    throw CheckpointMismatch("checkpoint holds " + std::to_string(count) + " tensors, model needs " +
                             std::to_string(expected.size()));
  }
  for (auto& [name, target] : expected) {
    const std::string stored = read_bytes(in, get_u32(in));
    if (stored != name) {
      throw CheckpointMismatch("expected tensor \"" + name + "\", found \"" + stored + "\"");
    }
    const Tensor t = read_tensor(in);
    if (t.shape() != target.shape()) {
      throw CheckpointMismatch("tensor \"" + name + "\" has shape " + shape_to_string(t.shape()) +
                               ", model needs " + shape_to_string(target.shape()));
    }
    std::copy(t.data().begin(), t.data().end(), target.data().begin());
  }
  return loaded;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace mfcm
