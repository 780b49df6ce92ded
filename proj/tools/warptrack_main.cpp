// Command-line front end: track, localize, synth, eval, bench.
//
// Options may also come from a `key = value` config file given with
// --config; explicit command-line flags override file values.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "warptrack/harness/runner.hpp"
#include "warptrack/harness/synthetic.hpp"
#include "warptrack/io/config_file.hpp"

namespace wt = warptrack;

namespace {

struct CommonOpts {
  std::string sm = "fclk";
  std::string am = "ssd";
  std::string ssm = "8";
  std::string ilm = "none";
  std::string resolution = "50x50";
  std::string seq;
  std::string gt;
  std::string init;
  std::uint64_t seed = 0;
  std::string out;
  int maxIters = 30;
  double epsilon = 0.01;
  std::string hessianOrder = "first";
  double smoothSigma = 1.0;
  int smoothKsize = 5;
  int nnSamples = 1000;
  std::string nnIndex = "kd-tree";
  int pfParticles = 200;
  double pfResample = 0.5;
  double cornerSigma = 5.0;
};

void addTrackerOptions(CLI::App* app, CommonOpts& o) {
  app->add_option("--sm", o.sm, "search method: iclk fclk falk ialk esm nn pf")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--am", o.am, "appearance model: ssd scv rscv ncc zncc")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--ssm", o.ssm, "state space model: 2/4/6/8 or names")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--ilm", o.ilm, "illumination model: none gb")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--resolution", o.resolution, "sampling grid, e.g. 50x50")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--seed", o.seed, "random seed")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--max-iters", o.maxIters, "max update iterations per frame")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--epsilon", o.epsilon, "corner-change convergence threshold, px")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--hessian-order", o.hessianOrder, "first or second")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--smooth-sigma", o.smoothSigma,
                  "Gaussian preprocessing sigma (0 disables)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--smooth-ksize", o.smoothKsize, "Gaussian kernel size (odd)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--nn-samples", o.nnSamples, "NN dataset size")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--nn-index", o.nnIndex, "NN index: brute-force or kd-tree")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--pf-particles", o.pfParticles, "particle count")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--pf-resample", o.pfResample, "ESS resampling fraction")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--corner-sigma", o.cornerSigma,
                  "sampler corner sigma heuristic input, px")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

std::pair<int, int> parseResolution(const std::string& s) {
  int rx = 0, ry = 0;
  const size_t x = s.find('x');
  if (x == std::string::npos) {
    rx = ry = std::stoi(s);
  } else {
    rx = std::stoi(s.substr(0, x));
    ry = std::stoi(s.substr(x + 1));
  }
  if (rx < 2 || ry < 2) throw CLI::ValidationError("resolution must be >= 2x2");
  return {rx, ry};
}

wt::TrackerSpec makeSpec(const CommonOpts& o) {
  wt::TrackerSpec spec;
  spec.sm = o.sm;
  spec.am = o.am;
  spec.ssm = o.ssm;
  spec.ilm = o.ilm;
  auto [rx, ry] = parseResolution(o.resolution);
  spec.config.resX = rx;
  spec.config.resY = ry;
  spec.config.maxIterations = o.maxIters;
  spec.config.epsilon = o.epsilon;
  spec.config.hessianOrder = o.hessianOrder == "second"
                                 ? wt::HessianOrder::Second
                                 : wt::HessianOrder::First;
  spec.config.seed = o.seed;
  spec.config.nnSamples = o.nnSamples;
  spec.config.nnIndex = o.nnIndex == "brute-force" ? wt::NnIndexKind::BruteForce
                                                   : wt::NnIndexKind::KdTree;
  spec.config.pfParticles = o.pfParticles;
  spec.config.pfResampleThreshold = o.pfResample;
  spec.config.cornerSigmaPx = o.cornerSigma;
  return spec;
}

void printSummary(const wt::EvalSummary& s) {
  std::printf("frames            %zu\n", s.frames);
  std::printf("mean MCD          %.4f px\n", s.meanMcd);
  std::printf("median MCD        %.4f px\n", s.medianMcd);
  for (size_t i = 0; i < wt::kSuccessThresholds.size(); ++i)
    std::printf("success @ %4.0f px  %.3f\n", wt::kSuccessThresholds[i],
                s.successRate[i]);
  if (s.meanUpdateMicros > 0.0)
    std::printf("mean update       %.1f us (%.1f updates/s)\n",
                s.meanUpdateMicros, 1e6 / s.meanUpdateMicros);
}

// Expands `--config FILE` into leading `--key=value` tokens so that
// explicitly passed flags (parsed later) take precedence.
std::vector<std::string> expandConfig(int argc, char** argv) {
  std::vector<std::string> args;
  std::string configPath;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) {
      configPath = argv[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      configPath = a.substr(9);
    } else {
      args.push_back(a);
    }
  }
  if (!configPath.empty()) {
    const auto kv = wt::readConfigFile(configPath);
    std::vector<std::string> expanded;
    // subcommand name must stay first
    size_t insertAt = 0;
    if (!args.empty() && !args[0].empty() && args[0][0] != '-') insertAt = 1;
    expanded.assign(args.begin(), args.begin() + insertAt);
    for (const auto& [k, v] : kv) expanded.push_back("--" + k + "=" + v);
    expanded.insert(expanded.end(), args.begin() + insertAt, args.end());
    return expanded;
  }
  return args;
}

int cmdTrack(const CommonOpts& o) {
  wt::SequenceSource seq(o.seq);
  wt::RunConfig cfg;
  cfg.tracker = makeSpec(o);
  cfg.preprocess.sigma = o.smoothSigma;
  cfg.preprocess.ksize = o.smoothKsize;
  cfg.outDir = o.out;

  std::vector<wt::Corners> truth;
  if (!o.gt.empty()) truth = wt::readCornersFile(o.gt);
  if (!o.init.empty())
    cfg.initCorners = wt::parseCornersArg(o.init);
  else if (!truth.empty())
    cfg.initCorners = truth.front();
  else
    throw std::runtime_error("track: need --init or --gt for initial corners");

  const wt::RunResult result = wt::runTracking(seq, cfg);
  if (!truth.empty()) {
    const wt::EvalSummary s = wt::evaluate(result.corners, truth, result.updateMicros);
    printSummary(s);
    if (!o.out.empty()) wt::writeRunOutputs(o.out, result, &s);
  } else {
    double tsum = 0.0;
    for (long t : result.updateMicros) tsum += static_cast<double>(t);
    std::printf("frames %zu, mean update %.1f us\n", result.corners.size(),
                result.corners.size() > 1 ? tsum / (result.corners.size() - 1) : 0.0);
  }
  return 0;
}

int cmdLocalize(const CommonOpts& o, const std::string& refPath) {
  wt::SequenceSource seq(o.seq);
  const wt::Image ref = wt::readPnm(refPath);
  if (o.init.empty()) throw std::runtime_error("localize: --init required");
  wt::RunConfig cfg;
  cfg.tracker = makeSpec(o);
  cfg.preprocess.sigma = o.smoothSigma;
  cfg.preprocess.ksize = o.smoothKsize;
  cfg.outDir = o.out;
  const wt::RunResult result =
      wt::runLocalization(seq, ref, wt::parseCornersArg(o.init), cfg);
  if (!o.gt.empty()) {
    const wt::EvalSummary s =
        wt::evaluate(result.corners, wt::readCornersFile(o.gt), result.updateMicros);
    printSummary(s);
  }
  std::printf("trajectory of %zu regions\n", result.corners.size());
  return 0;
}

int cmdSynth(const CommonOpts& o, const std::string& texturePath, int size,
             int frames, double sigma) {
  if (o.out.empty()) throw std::runtime_error("synth: --out required");
  wt::Image base = texturePath.empty()
                       ? wt::makeNoiseTexture(size, size, o.seed)
                       : wt::readPnm(texturePath);
  wt::SynthConfig sc;
  sc.ssm = o.ssm;
  sc.frames = frames;
  sc.cornerSigmaPx = sigma;
  sc.seed = o.seed;
  if (!o.init.empty()) sc.initCorners = wt::parseCornersArg(o.init);
  const wt::SynthSequence seq = wt::generateSynthetic(base, sc);
  wt::writeSequence(o.out, seq);
  std::printf("wrote %zu frames + gt.txt to %s\n", seq.frames.size(),
              o.out.c_str());
  return 0;
}

int cmdEval(const std::string& resultPath, const std::string& gtPath) {
  const auto result = wt::readCornersFile(resultPath);
  const auto truth = wt::readCornersFile(gtPath);
  printSummary(wt::evaluate(result, truth));
  return 0;
}

int cmdBench(const CommonOpts& o, int frames) {
  // small-displacement synthetic homography sequence at the given resolution
  const wt::Image base = wt::makeNoiseTexture(300, 300, o.seed + 7);
  wt::SynthConfig sc;
  sc.ssm = "homography";
  sc.frames = frames;
  sc.cornerSigmaPx = 1.0;
  sc.seed = o.seed;
  const wt::SynthSequence seq = wt::generateSynthetic(base, sc);

  for (const std::string sm : {"iclk", "fclk"}) {
    CommonOpts bo = o;
    bo.sm = sm;
    bo.am = "ssd";
    bo.ssm = "homography";
    const wt::TrackerSpec spec = makeSpec(bo);
    auto tracker = wt::makeTracker(spec);
    tracker->initialize(seq.frames[0], seq.truth[0]);
    // warm-up
    tracker->update(seq.frames[1 % seq.frames.size()]);
    const auto t0 = std::chrono::steady_clock::now();
    int updates = 0;
    for (size_t t = 1; t < seq.frames.size(); ++t, ++updates)
      tracker->update(seq.frames[t]);
    const auto t1 = std::chrono::steady_clock::now();
    const double sec = std::chrono::duration<double>(t1 - t0).count();
    std::printf("%s ssd/homography %dx%d: %.0f updates/s (%d updates, %.3f s)\n",
                sm.c_str(), spec.config.resX, spec.config.resY, updates / sec,
                updates, sec);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warptrack: registration-based template tracking"};
  app.require_subcommand(1);
  app.footer(
      "Options may be read from a `key = value` file via --config FILE;\n"
      "explicit command-line flags override file values.");

  CommonOpts o;
  std::string refPath, texturePath, resultPath;
  int size = 300, frames = 100;
  double synthSigma = 3.0;

  CLI::App* track = app.add_subcommand("track", "track a region through a sequence");
  addTrackerOptions(track, o);
  track->add_option("--seq", o.seq, "frame directory")->required();
  track->add_option("--gt", o.gt, "ground-truth corners file");
  track->add_option("--init", o.init, "initial corners x1,y1,...,y4");
  track->add_option("--out", o.out, "output directory");

  CLI::App* loc = app.add_subcommand("localize",
                                     "register query frames to a reference image");
  addTrackerOptions(loc, o);
  loc->add_option("--ref", refPath, "reference image")->required();
  loc->add_option("--seq", o.seq, "query frame directory")->required();
  loc->add_option("--init", o.init, "initial region in the reference")->required();
  loc->add_option("--gt", o.gt, "ground-truth trajectory file");
  loc->add_option("--out", o.out, "output directory");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic sequence");
  addTrackerOptions(synth, o);
  synth->add_option("--out", o.out, "output directory")->required();
  synth->add_option("--texture", texturePath, "base texture image (default: noise)");
  synth->add_option("--size", size, "texture size for generated noise");
  synth->add_option("--frames", frames, "frame count");
  synth->add_option("--corner-rw-sigma", synthSigma, "corner random-walk sigma, px");
  synth->add_option("--init", o.init, "initial region corners");

  CLI::App* evalCmd = app.add_subcommand("eval", "score a corners file against ground truth");
  evalCmd->add_option("--result", resultPath, "tracked corners file")->required();
  evalCmd->add_option("--gt", o.gt, "ground-truth corners file")->required();

  CLI::App* bench = app.add_subcommand("bench", "measure gradient-descent throughput");
  addTrackerOptions(bench, o);
  bench->add_option("--frames", frames, "number of benchmark updates");

  std::vector<std::string> args;
  try {
    args = expandConfig(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    std::vector<const char*> argvPtrs;
    argvPtrs.push_back(argv[0]);
    for (const auto& a : args) argvPtrs.push_back(a.c_str());
    app.parse(static_cast<int>(argvPtrs.size()), argvPtrs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (track->parsed()) return cmdTrack(o);
    if (loc->parsed()) return cmdLocalize(o, refPath);
    if (synth->parsed()) return cmdSynth(o, texturePath, size, frames, synthSigma);
    if (evalCmd->parsed()) return cmdEval(resultPath, o.gt);
    if (bench->parsed()) return cmdBench(o, frames);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
