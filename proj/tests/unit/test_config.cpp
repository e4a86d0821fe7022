#include <gtest/gtest.h>

#include "mfcm/config.hpp"
#include "mfcm/error.hpp"

namespace {

using namespace mfcm;

TEST(Config, EmptyObjectKeepsDefaults) {
  const auto cfg = parse_run_config("{}");
  EXPECT_EQ(cfg.dsp, DspConfig{});
  EXPECT_EQ(cfg.model, MfcmNetConfig{});
  EXPECT_EQ(cfg.train, TrainConfig{});
}

TEST(Config, JsonRoundTrip) {
  RunConfig cfg;
  cfg.dsp.n_mels = 40;
  cfg.dsp.fmax = 7000.0;
  cfg.model = MfcmNetConfig::micro(64, 48);
  cfg.model.mfca.variant = MfcaVariant::InverseDct;
  cfg.train.epochs = 3;
  cfg.train.seed = 42;
  const auto back = parse_run_config(to_json(cfg));
  EXPECT_EQ(back.dsp, cfg.dsp);
  EXPECT_EQ(back.model, cfg.model);
  EXPECT_EQ(back.train, cfg.train);
}

TEST(Config, StrictParsing) {
  EXPECT_THROW(parse_run_config(R"({"dsp": {"n_mel": 64}})"), ConfigInvalid);
  EXPECT_THROW(parse_run_config(R"({"train": {"epochs": "ten"}})"), ConfigInvalid);
  EXPECT_THROW(parse_run_config(R"({"model": {"mfca": {"variant": "other"}}})"), ConfigInvalid);
  EXPECT_THROW(parse_run_config("not json"), ConfigInvalid);
  EXPECT_THROW(parse_run_config(R"({"dsp": {"hop": 0}})"), ConfigInvalid);
}

TEST(Config, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

}  // namespace
