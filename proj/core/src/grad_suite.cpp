#include "mfcm/grad_suite.hpp"

#include <functional>
#include <memory>
#include <string_view>

#include "mfcm/ops.hpp"

namespace mfcm {

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo, double hi, bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Scalar loss that weights every output entry by a fixed random factor.
Tensor project(Tape& tape, const Tensor& y, const Tensor& weights) { return sum(tape, mul(tape, y, weights)); }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

void randomize_normalization(MfcmNet& net, Rng& rng) {
  for (auto& [name, tensor] : net.named_tensors()) {
    double lo = 0.0, hi = 0.0;
    if (ends_with(name, "gamma")) {
      lo = 0.5, hi = 1.5;
    } else if (ends_with(name, "beta") || ends_with(name, "running_mean")) {
      lo = -0.5, hi = 0.5;
    } else if (ends_with(name, "running_var")) {
      lo = 0.5, hi = 2.0;
    } else {
      continue;
    }
    for (double& v : tensor.data()) v = rng.uniform(lo, hi);
  }
}

GradCheckResult network_grad_check(NormMode mode, MfcaVariant variant, std::uint64_t seed) {
  auto cfg = MfcmNetConfig::micro(12, 12);
  cfg.mfca.variant = variant;
  MfcmNet net(cfg, seed);
  Rng rng(seed + 100);
  randomize_normalization(net, rng);
  const Tensor x = random_tensor({2, 3, 12, 12}, rng, 0.0, 1.0, false);
  const Tensor labels(Shape{2, 1}, std::vector<double>{0.0, 1.0});
  return grad_check([&](Tape& t) { return bce_with_logits(t, net.forward(t, x, {mode}), labels); },
                    net.parameters());
}

std::vector<GradSuiteEntry> run_grad_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradSuiteEntry> out;
  auto input = [&](Shape shape, double lo = -1.0, double hi = 1.0) { return random_tensor(std::move(shape), rng, lo, hi, true); };
  auto constant = [&](Shape shape) { return random_tensor(std::move(shape), rng, -1.0, 1.0, false); };
  auto check = [&](std::string name, const std::function<Tensor(Tape&)>& loss, std::vector<Tensor> params,
                   double threshold = kOpGradThreshold) {
    out.push_back({std::move(name), grad_check(loss, std::move(params)), threshold});
  };

  {
    const Tensor x = input({1, 2, 5, 5}), w = input({3, 2, 3, 3}), b = input({3});
    const Tensor p = constant({1, 3, 3, 3});
    check("conv2d", [=](Tape& t) { return project(t, conv2d(t, x, w, b, {2, 3, 3, 3, 2, 1, 1}), p); }, {x, w, b});
  }
  {
    const Tensor x = input({2, 4, 4, 4}), w = input({4, 2, 1, 1});
    const Tensor p = constant({2, 4, 4, 4});
    check("conv2d_grouped", [=](Tape& t) { return project(t, conv2d(t, x, w, Tensor(), {4, 4, 1, 1, 1, 0, 2}), p); }, {x, w});
  }
  {
    const Tensor x = input({2, 3, 5, 5}), w = input({3, 1, 3, 3}), b = input({3});
    const Tensor p = constant({2, 3, 5, 5});
    check("depthwise_conv2d",
          [=](Tape& t) { return project(t, depthwise_conv2d(t, x, w, b, ConvSpec::depthwise(3, 3, 1, 1)), p); },
          {x, w, b});
  }
  {
    // Entries drawn from the three linear pieces, clear of the kinks at 0 and 6.
    Tensor x(Shape{3, 4}, true);
    for (double& v : x.data()) {
      const std::size_t piece = rng.below(3);
      v = piece == 0 ? rng.uniform(-3.0, -0.5) : piece == 1 ? rng.uniform(0.5, 5.5) : rng.uniform(6.5, 9.0);
    }
    const Tensor p = constant({3, 4});
    check("relu6", [=](Tape& t) { return project(t, relu6(t, x), p); }, {x});
  }
  {
    const Tensor x = input({3, 4}, -4.0, 4.0);
    const Tensor p = constant({3, 4});
    check("sigmoid", [=](Tape& t) { return project(t, sigmoid(t, x), p); }, {x});
  }
  for (NormMode mode : {NormMode::Train, NormMode::Eval}) {
    const Tensor x = input({3, 2, 3, 3}, -2.0, 2.0), g = input({2}, 0.5, 1.5), b = input({2});
    const Tensor p = constant({3, 2, 3, 3});
    auto stats = std::make_shared<BatchNormStats>(2);
    stats->running_mean.data()[0] = 0.3;
    stats->running_var.data()[1] = 2.0;
    check(mode == NormMode::Train ? "batchnorm2d_train" : "batchnorm2d_eval",
          [=](Tape& t) { return project(t, batchnorm2d(t, x, g, b, *stats, mode), p); }, {x, g, b});
  }
  {
    const Tensor x = input({2, 3, 3, 4});
    const Tensor p = constant({2, 3});
    check("global_avg_pool", [=](Tape& t) { return project(t, global_avg_pool(t, x), p); }, {x});
  }
  {
    const Tensor x = input({3, 4}), w = input({4, 2}), b = input({2});
    const Tensor p = constant({3, 2});
    check("dense", [=](Tape& t) { return project(t, dense(t, x, w, b), p); }, {x, w, b});
  }
  {
    const Tensor x = input({4, 3}), w = input({3, 1}), b = input({1});
    const Tensor y(Shape{4, 1}, std::vector<double>{0.0, 1.0, 1.0, 0.0});
    check("bce_with_logits", [=](Tape& t) { return bce_with_logits(t, dense(t, x, w, b), y); }, {x, w, b});
  }
  {
    const Tensor a = input({2, 3}), b = input({2, 3});
    const Tensor p = constant({2, 3});
    check("add", [=](Tape& t) { return project(t, add(t, a, b), p); }, {a, b});
    check("mul", [=](Tape& t) { return project(t, mul(t, a, b), p); }, {a, b});
    check("sum", [=](Tape& t) { return sum(t, mul(t, a, a)); }, {a});
  }
  {
    const Tensor x = input({2, 2, 5, 3});
    const Tensor p = constant({4, 15});
    check("reshape", [=](Tape& t) { return project(t, reshape(t, x, {4, 15}), p); }, {x});
    const Tensor q = constant({2, 2, 2, 3});
    check("narrow", [=](Tape& t) { return project(t, narrow(t, x, 2, 1, 2), q); }, {x});
    const Tensor r = constant({2, 2, 5, 3});
    check("concat",
          [=](Tape& t) { return project(t, concat(t, {narrow(t, x, 2, 3, 2), narrow(t, x, 2, 0, 3)}, 2), r); }, {x});
  }
  {
    const Tensor w = input({2, 3});
    const Tensor p = constant({2, 3, 2, 4});
    check("broadcast_spatial", [=](Tape& t) { return project(t, broadcast_spatial(t, w, 2, 4), p); }, {w});
  }
  {
    const Tensor x = input({2, 3, 5});
    const Tensor p = constant({2, 3, 5});
    check("dct2d_ortho", [=](Tape& t) { return project(t, dct2d_ortho(t, x), p); }, {x});
    check("idct2d_ortho", [=](Tape& t) { return project(t, idct2d_ortho(t, x), p); }, {x});
  }
  {
    const Tensor x = input({2, 4, 3});
    const std::vector<std::size_t> idx = {0, 1, 3, 7};
    const Tensor p = constant({2, 4});
    check("select_coefficients", [=](Tape& t) { return project(t, select_coefficients(t, x, idx), p); }, {x});
    const Tensor c = input({2, 4});
    const Tensor q = constant({2, 4, 3});
    check("place_coefficients", [=](Tape& t) { return project(t, place_coefficients(t, c, idx, 4, 3), q); }, {c});
  }
  for (MfcaVariant variant : {MfcaVariant::Excitation, MfcaVariant::InverseDct}) {
    MfcaConfig cfg;
    cfg.variant = variant;
    const MfcaParams params = init_mfca(4, cfg, rng);
    for (Tensor b : {params.reduce_bias, params.expand_bias}) {
      if (b.defined()) for (double& v : b.data()) v = rng.uniform(-0.5, 0.5);
    }
    const Tensor x = input({2, 4, 6, 3});
    const Tensor p = constant({2, 4, 6, 3});
    std::vector<Tensor> params_list = {x};
    for (const Tensor& t : {params.reduce_weight, params.reduce_bias, params.expand_weight, params.expand_bias}) {
      if (t.defined()) params_list.push_back(t);
    }
    check(variant == MfcaVariant::Excitation ? "mfca_excitation" : "mfca_inverse_dct",
          [=](Tape& t) {
            const auto att = mfca_attention(t, x, params, cfg);
            return project(t, mfca_apply(t, x, att.attention), p);
          },
          params_list);
  }
  {
    const InvertedResidualSpec spec{4, 2, 4, 1};
    auto params = std::make_shared<InvertedResidualParams>(init_inverted_residual(spec, rng));
    for (ConvBnParams* cb : {&params->expand, &params->depthwise, &params->project}) {
      for (double& v : cb->bn.gamma.data()) v = rng.uniform(0.5, 1.5);
      for (double& v : cb->bn.beta.data()) v = rng.uniform(-0.5, 0.5);
    }
    const Tensor x = input({2, 4, 5, 5});
    const Tensor p = constant({2, 4, 5, 5});
    std::vector<Tensor> params_list = {x};
    for (ConvBnParams* cb : {&params->expand, &params->depthwise, &params->project}) {
      params_list.insert(params_list.end(), {cb->weight, cb->bn.gamma, cb->bn.beta});
    }
    check("inverted_residual",
          [=](Tape& t) { return project(t, inverted_residual_forward(t, x, spec, *params, NormMode::Train), p); },
          params_list);
  }
  out.push_back({"mfcmnet_micro_train", network_grad_check(NormMode::Train, MfcaVariant::Excitation, seed),
                 kNetworkGradThreshold});
  out.push_back({"mfcmnet_micro_eval", network_grad_check(NormMode::Eval, MfcaVariant::Excitation, seed),
                 kNetworkGradThreshold});
  return out;
}

}  // namespace mfcm
