#include "mfcm/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "mfcm/error.hpp"

namespace mfcm {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(std::string_view where, const std::string& what) {
  throw ConfigInvalid(std::string(where) + ": " + what);
}

void expect_object(const json& j, std::string_view where) {
  if (!j.is_object()) invalid(where, "expected an object");
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed,
                    std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) invalid(where, "unknown key \"" + key + "\"");
  }
}

template <typename T>
void read_count(const json& j, const char* key, T& out, std::string_view where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) invalid(where, std::string(key) + " must be a non-negative integer");
  out = v.get<T>();
}

void read_number(const json& j, const char* key, double& out, std::string_view where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number()) invalid(where, std::string(key) + " must be a number");
  out = v.get<double>();
}

void read_bool(const json& j, const char* key, bool& out, std::string_view where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_boolean()) invalid(where, std::string(key) + " must be a boolean");
  out = v.get<bool>();
}

void read_string(const json& j, const char* key, std::string& out, std::string_view where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_string()) invalid(where, std::string(key) + " must be a string");
  out = v.get<std::string>();
}

json parse_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigInvalid(std::string("malformed JSON: ") + e.what());
  }
}

DspConfig dsp_from_json(const json& j) {
  constexpr std::string_view where = "dsp";
  expect_object(j, where);
  reject_unknown(j, {"sample_rate", "frame_len", "hop", "window", "n_mels", "fmin", "fmax", "top_db",
                     "n_mfcc", "mfcc_log"},
                 where);
  DspConfig cfg;
  read_count(j, "sample_rate", cfg.sample_rate, where);
  read_count(j, "frame_len", cfg.frame_len, where);
  read_count(j, "hop", cfg.hop, where);
  read_count(j, "n_mels", cfg.n_mels, where);
  read_number(j, "fmin", cfg.fmin, where);
  if (j.contains("fmax") && !j.at("fmax").is_null()) {
    double fmax = 0.0;
    read_number(j, "fmax", fmax, where);
    cfg.fmax = fmax;
  }
  read_number(j, "top_db", cfg.top_db, where);
  read_count(j, "n_mfcc", cfg.n_mfcc, where);
  std::string window = cfg.window == WindowKind::Hann ? "hann" : "rectangular";
  read_string(j, "window", window, where);
  if (window == "hann") {
    cfg.window = WindowKind::Hann;
  } else if (window == "rectangular") {
    cfg.window = WindowKind::Rectangular;
  } else {
    invalid(where, "window must be \"hann\" or \"rectangular\"");
  }
  std::string log = "natural";
  read_string(j, "mfcc_log", log, where);
  if (log == "natural") {
    cfg.mfcc_log = LogBase::Natural;
  } else if (log == "log10") {
    cfg.mfcc_log = LogBase::Ten;
  } else {
    invalid(where, "mfcc_log must be \"natural\" or \"log10\"");
  }
  cfg.validate();
  return cfg;
}

json dsp_to_json(const DspConfig& cfg) {
  return json{{"sample_rate", cfg.sample_rate},
              {"frame_len", cfg.frame_len},
              {"hop", cfg.hop},
              {"window", cfg.window == WindowKind::Hann ? "hann" : "rectangular"},
              {"n_mels", cfg.n_mels},
              {"fmin", cfg.fmin},
              {"fmax", cfg.fmax ? json(*cfg.fmax) : json(nullptr)},
              {"top_db", cfg.top_db},
              {"n_mfcc", cfg.n_mfcc},
              {"mfcc_log", cfg.mfcc_log == LogBase::Natural ? "natural" : "log10"}};
}

MfcmNetConfig model_from_json(const json& j) {
  constexpr std::string_view where = "model";
  expect_object(j, where);
  reject_unknown(j, {"input_channels", "input_height", "input_width", "stem_channels", "stages",
                     "mfca", "head_hidden"},
                 where);
  MfcmNetConfig cfg;
  read_count(j, "input_channels", cfg.input_channels, where);
  read_count(j, "input_height", cfg.input_height, where);
  read_count(j, "input_width", cfg.input_width, where);
  read_count(j, "stem_channels", cfg.stem_channels, where);
  read_count(j, "head_hidden", cfg.head_hidden, where);
  if (j.contains("stages")) {
    const auto& stages = j.at("stages");
    if (!stages.is_array()) invalid(where, "stages must be an array");
    cfg.stages.clear();
    for (const auto& s : stages) {
      constexpr std::string_view stage_where = "model.stages[]";
      expect_object(s, stage_where);
      reject_unknown(s, {"in", "expansion", "out", "stride"}, stage_where);
      InvertedResidualSpec spec;
      read_count(s, "in", spec.in_channels, stage_where);
      read_count(s, "expansion", spec.expansion_factor, stage_where);
      read_count(s, "out", spec.out_channels, stage_where);
      read_count(s, "stride", spec.stride, stage_where);
      cfg.stages.push_back(spec);
    }
  }
  if (j.contains("mfca")) {
    const auto& m = j.at("mfca");
    constexpr std::string_view mfca_where = "model.mfca";
    expect_object(m, mfca_where);
    reject_unknown(m, {"enabled", "num_bands", "dct_coeffs", "reduction_ratio", "insert_after", "variant"},
                   mfca_where);
    read_bool(m, "enabled", cfg.mfca.enabled, mfca_where);
    read_count(m, "num_bands", cfg.mfca.num_bands, mfca_where);
    read_count(m, "dct_coeffs", cfg.mfca.dct_coeffs, mfca_where);
    read_count(m, "reduction_ratio", cfg.mfca.reduction_ratio, mfca_where);
    read_count(m, "insert_after", cfg.mfca.insert_after, mfca_where);
    std::string variant = "excitation";
    read_string(m, "variant", variant, mfca_where);
    if (variant == "excitation") {
      cfg.mfca.variant = MfcaVariant::Excitation;
    } else if (variant == "inverse_dct") {
      cfg.mfca.variant = MfcaVariant::InverseDct;
    } else {
      invalid(mfca_where, "variant must be \"excitation\" or \"inverse_dct\"");
    }
  }
  cfg.validate();
  return cfg;
}

json model_to_json(const MfcmNetConfig& cfg) {
  json stages = json::array();
  for (const auto& s : cfg.stages) {
    stages.push_back({{"in", s.in_channels},
                      {"expansion", s.expansion_factor},
                      {"out", s.out_channels},
                      {"stride", s.stride}});
  }
  return json{{"input_channels", cfg.input_channels},
              {"input_height", cfg.input_height},
              {"input_width", cfg.input_width},
              {"stem_channels", cfg.stem_channels},
              {"stages", stages},
              {"mfca",
               {{"enabled", cfg.mfca.enabled},
                {"num_bands", cfg.mfca.num_bands},
                {"dct_coeffs", cfg.mfca.dct_coeffs},
                {"reduction_ratio", cfg.mfca.reduction_ratio},
                {"insert_after", cfg.mfca.insert_after},
                {"variant", cfg.mfca.variant == MfcaVariant::Excitation ? "excitation" : "inverse_dct"}}},
              {"head_hidden", cfg.head_hidden}};
}

TrainConfig train_from_json(const json& j) {
  constexpr std::string_view where = "train";
  expect_object(j, where);
  reject_unknown(j, {"batch_size", "epochs", "learning_rate", "beta1", "beta2", "adam_eps", "seed",
                     "checkpoint", "cache_dir"},
                 where);
  TrainConfig cfg;
  read_count(j, "batch_size", cfg.batch_size, where);
  read_count(j, "epochs", cfg.epochs, where);
  read_number(j, "learning_rate", cfg.learning_rate, where);
  read_number(j, "beta1", cfg.beta1, where);
  read_number(j, "beta2", cfg.beta2, where);
  read_number(j, "adam_eps", cfg.adam_eps, where);
  read_count(j, "seed", cfg.seed, where);
  read_string(j, "checkpoint", cfg.checkpoint, where);
  read_string(j, "cache_dir", cfg.cache_dir, where);
  cfg.validate();
  return cfg;
}

json train_to_json(const TrainConfig& cfg) {
  return json{{"batch_size", cfg.batch_size}, {"epochs", cfg.epochs},
              {"learning_rate", cfg.learning_rate}, {"beta1", cfg.beta1},
              {"beta2", cfg.beta2}, {"adam_eps", cfg.adam_eps},
              {"seed", cfg.seed}, {"checkpoint", cfg.checkpoint},
              {"cache_dir", cfg.cache_dir}};
}

}  // namespace

void DspConfig::validate() const {
  constexpr std::string_view where = "dsp";
  if (sample_rate == 0) invalid(where, "sample_rate must be positive");
  if (frame_len < 2 || !is_power_of_two(frame_len)) invalid(where, "frame_len must be a power of two >= 2");
  if (hop == 0 || hop > frame_len) invalid(where, "hop must satisfy 0 < hop <= frame_len");
  if (n_mels < 2) invalid(where, "n_mels must be >= 2");
  if (!(fmin >= 0.0 && fmin < effective_fmax() && effective_fmax() <= sample_rate / 2.0)) {
    invalid(where, "need 0 <= fmin < fmax <= sample_rate / 2");
  }
  if (!(top_db > 0.0)) invalid(where, "top_db must be positive");
  if (n_mfcc == 0 || n_mfcc > n_mels) invalid(where, "n_mfcc must be in [1, n_mels]");
}

void TrainConfig::validate() const {
  constexpr std::string_view where = "train";
  if (batch_size == 0) invalid(where, "batch_size must be >= 1");
  if (epochs == 0) invalid(where, "epochs must be >= 1");
  if (!(learning_rate >= 0.0)) invalid(where, "learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    invalid(where, "beta1 and beta2 must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) invalid(where, "adam_eps must be positive");
  if (checkpoint.empty()) invalid(where, "checkpoint name must not be empty");
}

RunConfig parse_run_config(std::string_view json_text) {
  const json j = parse_text(json_text);
  expect_object(j, "config");
  reject_unknown(j, {"dsp", "model", "train"}, "config");
  RunConfig cfg;
  if (j.contains("dsp")) cfg.dsp = dsp_from_json(j.at("dsp"));
  if (j.contains("model")) cfg.model = model_from_json(j.at("model"));
  if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

DspConfig parse_dsp_config(std::string_view json_text) { return dsp_from_json(parse_text(json_text)); }

MfcmNetConfig parse_model_config(std::string_view json_text) {
  return model_from_json(parse_text(json_text));
}

std::string to_json(const DspConfig& cfg) { return dsp_to_json(cfg).dump(); }
std::string to_json(const MfcmNetConfig& cfg) { return model_to_json(cfg).dump(); }
std::string to_json(const TrainConfig& cfg) { return train_to_json(cfg).dump(); }

std::string to_json(const RunConfig& cfg) {
  return json{{"dsp", dsp_to_json(cfg.dsp)},
              {"model", model_to_json(cfg.model)},
              {"train", train_to_json(cfg.train)}}
      .dump(2);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mfcm
