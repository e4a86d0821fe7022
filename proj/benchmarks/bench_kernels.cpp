#include <benchmark/benchmark.h>

#include <vector>

#include "mfcm/dsp.hpp"
#include "mfcm/fft.hpp"
#include "mfcm/model.hpp"
#include "mfcm/ops.hpp"
#include "mfcm/rng.hpp"

namespace {

using namespace mfcm;

std::vector<double> random_signal(std::size_t n, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  return x;
}

Tensor random_tensor(Shape shape, std::uint64_t seed = 2) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Fft(benchmark::State& state) {
  const auto x = random_signal(static_cast<std::size_t>(state.range(0)));
  const FftPlan<double> plan(x.size());
  for (auto _ : state) benchmark::DoNotOptimize(plan.forward(x));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(64, 4096);

void BM_FftFloat(benchmark::State& state) {
  const auto xd = random_signal(static_cast<std::size_t>(state.range(0)));
  const std::vector<float> x(xd.begin(), xd.end());
  const FftPlan<float> plan(x.size());
  for (auto _ : state) benchmark::DoNotOptimize(plan.forward(x));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FftFloat)->Arg(1024);

void BM_DftNaive(benchmark::State& state) {
  const auto x = random_signal(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dft_naive<double>(x));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DftNaive)->RangeMultiplier(4)->Range(64, 1024);

void BM_MelSpectrogram(benchmark::State& state) {
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples = random_signal(static_cast<std::size_t>(state.range(0)));
  const auto fb = build_mel_filterbank(64, 1024, 16000, 0.0, 8000.0);
  for (auto _ : state) benchmark::DoNotOptimize(mel_spectrogram(clip, {}, fb));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_MelSpectrogram)->Arg(16384)->Arg(64000);

void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({1, c, 48, 48});
  const Tensor w = random_tensor({c, c, 3, 3}, 3);
  Tape tape(false);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(tape, x, w, Tensor(), {c, c, 3, 3, 1, 1, 1}));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Conv2d)->Arg(8)->Arg(16);

void BM_Depthwise(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({1, c, 48, 48});
  const Tensor w = random_tensor({c, 1, 3, 3}, 3);
  Tape tape(false);
  for (auto _ : state) benchmark::DoNotOptimize(depthwise_conv2d(tape, x, w, Tensor(), ConvSpec::depthwise(c, 3, 1, 1)));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Depthwise)->Arg(16)->Arg(32);

void BM_MicroForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  MfcmNet net(MfcmNetConfig::micro());
  const Tensor x = random_tensor({n, 3, 96, 96});
  Tape tape(false);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(tape, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MicroForward)->Arg(1)->Arg(8);

void BM_MicroTrainStep(benchmark::State& state) {
  MfcmNet net(MfcmNetConfig::micro());
  const Tensor x = random_tensor({8, 3, 96, 96});
  Tensor y(Shape{8, 1});
  for (std::size_t i = 0; i < 4; ++i) y.data()[i] = 1.0;
  for (auto _ : state) {
    Tape tape;
    for (auto& p : net.parameters()) p.zero_grad();
    tape.backward(bce_with_logits(tape, net.forward(tape, x, {NormMode::Train}), y));
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_MicroTrainStep);

}  // namespace

BENCHMARK_MAIN();
