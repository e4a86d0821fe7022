#include "cli.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfcm/checkpoint.hpp"
#include "mfcm/config.hpp"
#include "mfcm/dsp.hpp"
#include "mfcm/error.hpp"
#include "mfcm/features.hpp"
#include "mfcm/fft.hpp"
#include "mfcm/grad_suite.hpp"
#include "mfcm/manifest.hpp"
#include "mfcm/model.hpp"
#include "mfcm/ops.hpp"
#include "mfcm/tensor_io.hpp"
#include "mfcm/train.hpp"
#include "mfcm/wav.hpp"

namespace mfcm::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct GlobalOptions {
  std::string config_path;
  std::uint64_t seed = Rng::kDefaultSeed;
  std::size_t threads = 1;
  std::string out_dir = ".";
};

RunConfig load_config(const GlobalOptions& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  cfg.train.seed = g.seed;
  return cfg;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const EvalResult& r, Split split) {
  json j;
  j["split"] = std::string(to_string(split));
  j["count"] = r.confusion.total();
  j["tp"] = r.confusion.tp;
  j["fp"] = r.confusion.fp;
  j["fn"] = r.confusion.fn;
  j["tn"] = r.confusion.tn;
  j["accuracy"] = r.metrics.accuracy;
  j["precision"] = optional_number(r.metrics.precision);
  j["recall"] = optional_number(r.metrics.recall);
  j["f1_standard"] = optional_number(r.metrics.f1_standard);
  j["f1_half"] = optional_number(r.metrics.f1_half);
  return j;
}

std::string_view prediction_name(double score) {
  return to_string(score >= kDecisionThreshold ? Label::Fake : Label::Real);
}

int cmd_extract(const GlobalOptions& g, const std::string& wav, const std::string& prefix, std::ostream& out) {
  const RunConfig cfg = load_config(g);
  const FeatureExtractor extractor(cfg.dsp, cfg.model.input_height, cfg.model.input_width);
  const auto analysis = extractor.analyze(read_wav_file(wav).second);
  // A relative prefix lands under --out; an absolute one is used as given.
  const std::string base = (std::filesystem::path(g.out_dir) / prefix).string();
  std::filesystem::create_directories(std::filesystem::path(base).parent_path());
  const json files = {
      {"mel_csv", base + ".mel.csv"},
      {"mel_pgm", base + ".mel.pgm"},
      {"mfcc_csv", base + ".mfcc.csv"},
      {"input", base + ".input.mfct"},
  };
  write_matrix_csv(files["mel_csv"].get<std::string>(), analysis.decibel.values);
  write_spectrogram_pgm(files["mel_pgm"].get<std::string>(), analysis.decibel, cfg.dsp.top_db);
  write_matrix_csv(files["mfcc_csv"].get<std::string>(), analysis.mfcc);
  save_tensor(files["input"].get<std::string>(), analysis.input, DType::Float32);
  json j;
  j["frames"] = analysis.decibel.frames();
  j["n_mels"] = analysis.decibel.bands();
  j["files"] = files;
  out << j.dump() << '\n';
  return kOk;
}

int cmd_train(const GlobalOptions& g, const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_config(g);
  const Manifest manifest = load_manifest(manifest_path);
  TrainOptions options;
  options.threads = g.threads;
  options.on_epoch = [&err](const EpochRecord& r) {
    err << "epoch " << r.epoch << " train_loss " << format_metric(r.train_loss) << " val_accuracy "
        << (r.validation ? format_metric(r.validation->accuracy) : std::string("undefined")) << '\n';
  };
  const TrainResult result = train(manifest, cfg.model, cfg.dsp, cfg.train, g.out_dir, options);
  json j;
  j["checkpoint"] = result.checkpoint.string();
  j["epoch_log"] = result.log_path.string();
  j["epochs"] = result.log.size();
  j["best_epoch"] = result.best_epoch;
  j["final_train_loss"] = result.log.empty() ? json(nullptr) : json(result.log.back().train_loss);
  out << j.dump() << '\n';
  return kOk;
}

int cmd_eval(const GlobalOptions& g, const std::string& checkpoint, const std::string& manifest_path,
             const std::string& split_name, const std::string& scores_path, std::ostream& out) {
  const Split split = parse_split(split_name);
  std::optional<ExpectedFeatures> expected;
  if (!g.config_path.empty()) {
    const RunConfig cfg = load_config(g);
    expected = ExpectedFeatures{cfg.dsp, cfg.model.input_height, cfg.model.input_width};
  }
  const Manifest manifest = load_manifest(manifest_path);
  const EvalResult result = evaluate_checkpoint(checkpoint, manifest, split, expected, g.threads);
  if (!scores_path.empty()) write_scores_csv(scores_path, result.scores);
  out << metrics_json(result, split).dump() << '\n';
  return kOk;
}

int cmd_infer(const std::string& checkpoint, const std::string& wav, std::ostream& out) {
  LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
  const auto& model_cfg = ckpt.model.config();
  const FeatureExtractor extractor(ckpt.dsp, model_cfg.input_height, model_cfg.input_width);
  const Tensor input = extractor.features(read_wav_file(wav).second);
  const double score = predict_scores(ckpt.model, {input}, 1).front();
  json j;
  j["score"] = score;
  j["prediction"] = std::string(prediction_name(score));
  out << j.dump() << '\n';
  return kOk;
}

int cmd_gradcheck(const GlobalOptions& g, bool seed_given, std::ostream& out) {
  const auto suite = run_grad_suite(seed_given ? g.seed : kGradSuiteSeed);
  bool all_passed = true;
  out << "op,max_rel_error,threshold,status\n";
  for (const auto& e : suite) {
    char line[160];
    std::snprintf(line, sizeof(line), "%s,%.3e,%.0e,%s\n", e.name.c_str(), e.result.max_rel_error, e.threshold,
                  e.passed() ? "pass" : "FAIL");
    out << line;
    all_passed = all_passed && e.passed();
  }
  return all_passed ? kOk : kNumericError;
}

Shape parse_shape(const std::string& text) {
  Shape shape;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('x', start), text.size());
    const std::string part = text.substr(start, end - start);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (part.empty() || used != part.size() || v == 0) {
      throw ConfigInvalid("shape \"" + text + "\" must look like 1x3x96x96");
    }
    shape.push_back(static_cast<std::size_t>(v));
    start = end + 1;
  }
  return shape;
}

// Repeats `body` until at least min_seconds have elapsed.
json time_it(const std::function<void()>& body, double items_per_call, double min_seconds = 0.25) {
  using clock = std::chrono::steady_clock;
  body();  // warm-up
  std::size_t iterations = 0;
  const auto start = clock::now();
  double elapsed = 0.0;
  do {
    body();
    ++iterations;
    elapsed = std::chrono::duration<double>(clock::now() - start).count();
  } while (elapsed < min_seconds);
  json j;
  j["iterations"] = iterations;
  j["seconds_per_iteration"] = elapsed / static_cast<double>(iterations);
  j["items_per_second"] = items_per_call * static_cast<double>(iterations) / elapsed;
  return j;
}

int cmd_bench(const GlobalOptions& g, const std::string& op, const std::string& shape_text, std::ostream& out) {
  const Shape shape = parse_shape(shape_text);
  Rng rng(g.seed);
  auto random = [&rng](Shape s) {
    Tensor t(std::move(s));
    for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
    return t;
  };
  auto need_rank = [&](std::size_t rank) {
    if (shape.size() != rank) {
      throw ConfigInvalid("bench " + op + " needs a rank-" + std::to_string(rank) + " shape");
    }
  };
  json report;
  report["op"] = op;
  report["shape"] = shape;
  json timing;
  Tape tape(false);
  if (op == "fft" || op == "dft") {
    need_rank(1);
    std::vector<double> x(shape[0]);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    if (op == "fft") {
      const FftPlan<double> plan(x.size());
      timing = time_it([&] { (void)plan.forward(x); }, 1.0);
    } else {
      timing = time_it([&] { (void)dft_naive<double>(x); }, 1.0);
    }
  } else if (op == "conv2d" || op == "depthwise") {
    need_rank(4);
    const Tensor x = random(shape);
    const std::size_t c = shape[1];
    const Tensor w = op == "conv2d" ? random({c, c, 3, 3}) : random({c, 1, 3, 3});
    const ConvSpec spec = op == "conv2d" ? ConvSpec{c, c, 3, 3, 1, 1, 1} : ConvSpec::depthwise(c, 3, 1, 1);
    timing = time_it([&] { (void)conv2d(tape, x, w, Tensor(), spec); }, static_cast<double>(shape[0]));
  } else if (op == "mel") {
    need_rank(1);
    const RunConfig cfg = load_config(g);
    const auto fb = build_mel_filterbank(cfg.dsp.n_mels, cfg.dsp.frame_len, cfg.dsp.sample_rate, cfg.dsp.fmin,
                                         cfg.dsp.effective_fmax());
    AudioClip clip;
    clip.sample_rate = cfg.dsp.sample_rate;
    clip.samples.resize(shape[0]);
    for (double& v : clip.samples) v = rng.uniform(-1.0, 1.0);
    timing = time_it([&] { (void)mel_spectrogram(clip, cfg.dsp.framing(), fb); }, 1.0);
  } else if (op == "forward") {
    need_rank(4);
    MfcmNetConfig cfg = load_config(g).model;
    cfg.input_channels = shape[1];
    cfg.input_height = shape[2];
    cfg.input_width = shape[3];
    MfcmNet net(cfg, g.seed);
    const Tensor x = random(shape);
    timing = time_it([&] { (void)net.forward(tape, x); }, static_cast<double>(shape[0]));
  } else {
    throw ConfigInvalid("unknown bench op \"" + op + "\"; expected fft, dft, conv2d, depthwise, mel or forward");
  }
  report.update(timing);
  report["threads"] = 1;
  out << report.dump() << '\n';
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Input:
      return kInputError;
    case ErrorCategory::Numeric:
      return kNumericError;
    case ErrorCategory::Config:
      return kConfigError;
  }
  return kNumericError;
}

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Audio deepfake detection with multi-frequency channel attention"};
  app.name("mfcm");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for feature extraction")
      ->check(CLI::Range(std::size_t{1}, std::size_t{256}))
      ->capture_default_str();
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();

  std::string wav, prefix, manifest, checkpoint, split = "testing", scores, op, shape;

  auto* extract = app.add_subcommand("extract", "Write mel, MFCC and model-input features of one clip");
  extract->add_option("wav", wav)->required();
  extract->add_option("prefix", prefix)->required();

  auto* train_cmd = app.add_subcommand("train", "Train a model on a manifest");
  train_cmd->add_option("manifest", manifest, "Corpus directory or manifest CSV")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  eval->add_option("checkpoint", checkpoint)->required();
  eval->add_option("manifest", manifest)->required();
  eval->add_option("--split", split, "training, validation or testing")->capture_default_str();
  eval->add_option("--scores", scores, "Write per-file scores to this CSV");

  auto* infer = app.add_subcommand("infer", "Score one clip");
  infer->add_option("checkpoint", checkpoint)->required();
  infer->add_option("wav", wav)->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "Check every backward rule against central differences");

  auto* bench = app.add_subcommand("bench", "Time one kernel");
  bench->add_option("op", op, "fft, dft, conv2d, depthwise, mel or forward")->required();
  bench->add_option("shape", shape, "e.g. 1024 or 1x3x96x96")->required();

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "mfcm: usage error: " << one_line(e.what()) << '\n';
    return kUsage;
  }

  try {
    if (*extract) return cmd_extract(g, wav, prefix, out);
    if (*train_cmd) return cmd_train(g, manifest, out, err);
    if (*eval) return cmd_eval(g, checkpoint, manifest, split, scores, out);
    if (*infer) return cmd_infer(checkpoint, wav, out);
    if (*gradcheck) return cmd_gradcheck(g, seed_opt->count() > 0, out);
    if (*bench) return cmd_bench(g, op, shape, out);
  } catch (const Error& e) {
    err << "mfcm: error: " << one_line(e.what()) << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "mfcm: internal error: " << one_line(e.what()) << '\n';
    return kNumericError;
  }
  return kUsage;
}

}  // namespace mfcm::cli
