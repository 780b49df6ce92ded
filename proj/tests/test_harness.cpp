#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "warptrack/harness/evaluate.hpp"
#include "warptrack/harness/preprocess.hpp"
#include "warptrack/harness/runner.hpp"
#include "warptrack/harness/synthetic.hpp"
#include "warptrack/io/config_file.hpp"
#include "warptrack/io/corners_io.hpp"
#include "warptrack/io/pnm.hpp"

using namespace warptrack;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

Corners boxCorners(double cx, double cy, double hx, double hy) {
  Corners c;
  c << cx - hx, cx + hx, cx + hx, cx - hx,
       cy - hy, cy - hy, cy + hy, cy + hy;
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("warptrack_test_" + name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("gaussian smoothing") {
  SECTION("constant image is unchanged") {
    const Image img(12, 9, 42.0);
    const Image out = gaussianSmooth(img, 1.0, 5);
    for (double v : out.data) CHECK(v == Approx(42.0).margin(1e-12));
  }

  SECTION("impulse response sums to one") {
    Image img(11, 11, 0.0);
    img.at(5, 5) = 1.0;
    const Image out = gaussianSmooth(img, 1.3, 7);
    double sum = 0.0;
    for (double v : out.data) sum += v;
    CHECK(sum == Approx(1.0).margin(1e-9));
  }

  SECTION("matches a dense 2-D convolution oracle") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(0, 255);
    Image img(16, 16);
    for (auto& v : img.data) v = uni(rng);
    const double sigma = 0.9;
    const int k = 5, r = k / 2;

    std::vector<double> kern(k);
    double ksum = 0;
    for (int i = -r; i <= r; ++i) {
      kern[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
      ksum += kern[i + r];
    }
    for (auto& v : kern) v /= ksum;

    const Image got = gaussianSmooth(img, sigma, k);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        double acc = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const int sx = std::clamp(x + dx, 0, 15);
            const int sy = std::clamp(y + dy, 0, 15);
            acc += kern[dx + r] * kern[dy + r] * img.at(sx, sy);
          }
        CHECK(got.at(x, y) == Approx(acc).margin(1e-9));
      }
    }
  }

  SECTION("even kernel size is rejected") {
    CHECK_THROWS_AS(gaussianSmooth(Image(8, 8, 1.0), 1.0, 4),
                    std::invalid_argument);
    CHECK_THROWS_AS(gaussianSmooth(Image(8, 8, 1.0), 0.0, 5),
                    std::invalid_argument);
  }
}

TEST_CASE("pnm io") {
  TempDir dir("pnm");

  SECTION("pgm round trip") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> uni(0, 255);
    Image img(23, 17);
    for (auto& v : img.data) v = uni(rng);
    const std::string path = (dir.path / "a.pgm").string();
    writePgm(path, img);
    const Image back = readPnm(path);
    REQUIRE(back.width == 23);
    REQUIRE(back.height == 17);
    for (size_t i = 0; i < img.data.size(); ++i)
      CHECK(back.data[i] == img.data[i]);
  }

  SECTION("ppm converts to grayscale with the standard weights") {
    const std::string path = (dir.path / "c.ppm").string();
    std::ofstream out(path, std::ios::binary);
    out << "P6\n# comment\n2 2\n255\n";
    const unsigned char px[12] = {255, 0, 0,  0, 255, 0,
                                  0,   0, 255, 255, 255, 255};
    out.write(reinterpret_cast<const char*>(px), 12);
    out.close();
    const Image img = readPnm(path);
    CHECK(img.at(0, 0) == Approx(0.299 * 255));
    CHECK(img.at(1, 0) == Approx(0.587 * 255));
    CHECK(img.at(0, 1) == Approx(0.114 * 255));
    CHECK(img.at(1, 1) == Approx(255.0));
  }

  SECTION("bad files are rejected") {
    const std::string path = (dir.path / "bad.pgm").string();
    std::ofstream(path) << "P5\n4 4\n255\nxx";  // truncated
    CHECK_THROWS(readPnm(path));
    CHECK_THROWS(readPnm((dir.path / "missing.pgm").string()));
  }
}

TEST_CASE("corners file round-trips exactly") {
  TempDir dir("corners");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-100, 900);
  std::vector<Corners> data;
  for (int i = 0; i < 25; ++i) {
    Corners c;
    for (int j = 0; j < 8; ++j) c.data()[j] = uni(rng);
    data.push_back(c);
  }
  const std::string path = (dir.path / "gt.txt").string();
  writeCornersFile(path, data);
  const auto back = readCornersFile(path);
  REQUIRE(back.size() == data.size());
  for (size_t i = 0; i < data.size(); ++i)
    CHECK((back[i] - data[i]).norm() == 0.0);

  // comments and blank lines are ignored
  std::ofstream app(path, std::ios::app);
  app << "# trailing comment\n\n";
  app.close();
  CHECK(readCornersFile(path).size() == data.size());

  std::ofstream(path) << "1 2 3\n";
  CHECK_THROWS(readCornersFile(path));
}

TEST_CASE("config file parsing") {
  TempDir dir("config");
  const std::string path = (dir.path / "run.cfg").string();
  std::ofstream(path) << "# tracker setup\n"
                      << "sm = esm\n"
                      << "resolution= 40x40 # inline comment\n"
                      << "  seed =7\n";
  const auto kv = readConfigFile(path);
  CHECK(kv.at("sm") == "esm");
  CHECK(kv.at("resolution") == "40x40");
  CHECK(kv.at("seed") == "7");
  CHECK(kv.size() == 3);

  std::ofstream(path) << "novalue\n";
  CHECK_THROWS(readConfigFile(path));
}

TEST_CASE("sequence source") {
  TempDir dir("seq");
  const Image a = makeNoiseTexture(32, 24, 1);
  writePgm((dir.path / "00002.pgm").string(), a);
  writePgm((dir.path / "00000.pgm").string(), a);
  writePgm((dir.path / "00001.pgm").string(), a);
  std::ofstream(dir.path / "notes.txt") << "ignored";

  SequenceSource seq(dir.path.string());
  REQUIRE(seq.frameCount() == 3);
  CHECK(seq.framePath(0) < seq.framePath(1));
  CHECK(seq.framePath(1) < seq.framePath(2));
  CHECK_NOTHROW(seq.loadFrame(0));

  // dimension mismatch is rejected
  writePgm((dir.path / "00003.pgm").string(), makeNoiseTexture(16, 16, 2));
  SequenceSource seq2(dir.path.string());
  seq2.loadFrame(0);
  CHECK_THROWS(seq2.loadFrame(3));
}

TEST_CASE("synthetic generation") {
  const Image base = makeNoiseTexture(200, 200, 11, 4, 32);

  SECTION("zero sigma keeps every frame identical") {
    SynthConfig cfg;
    cfg.frames = 5;
    cfg.cornerSigmaPx = 0.0;
    cfg.seed = 3;
    const SynthSequence seq = generateSynthetic(base, cfg);
    REQUIRE(seq.frames.size() == 5);
    for (const auto& f : seq.frames) CHECK(f.data == base.data);
    for (const auto& c : seq.truth) CHECK((c - seq.truth[0]).norm() == 0.0);
  }

  SECTION("the tracked patch is stationary under the ground truth") {
    SynthConfig cfg;
    cfg.ssm = "homography";
    cfg.frames = 8;
    cfg.cornerSigmaPx = 3.0;
    cfg.seed = 17;
    const SynthSequence seq = generateSynthetic(base, cfg);
    HomographySsm ssm;
    ssm.initialize(seq.truth[0], 24, 24);
    const Patch ref = samplePatch(seq.frames[0], ssm.getPts());
    for (size_t t = 1; t < seq.frames.size(); ++t) {
      ssm.setCorners(seq.truth[t]);
      const Patch cur = samplePatch(seq.frames[t], ssm.getPts());
      CHECK((cur - ref).cwiseAbs().mean() < 1.0);
    }
  }

  SECTION("seeded generation is byte-identical") {
    SynthConfig cfg;
    cfg.frames = 4;
    cfg.cornerSigmaPx = 2.0;
    cfg.seed = 99;
    const SynthSequence s1 = generateSynthetic(base, cfg);
    const SynthSequence s2 = generateSynthetic(base, cfg);
    for (size_t t = 0; t < s1.frames.size(); ++t) {
      CHECK(s1.frames[t].data == s2.frames[t].data);
      CHECK((s1.truth[t] - s2.truth[t]).norm() == 0.0);
    }
  }
}

TEST_CASE("evaluate") {
  const Corners a = boxCorners(50, 50, 10, 10);

  SECTION("identical corners give zero error") {
    CHECK(meanCornerDistance(a, a) == 0.0);
  }
  SECTION("uniform offset (3,4) gives 5") {
    Corners b = a;
    b.row(0).array() += 3.0;
    b.row(1).array() += 4.0;
    CHECK(meanCornerDistance(a, b) == Approx(5.0));
  }
  SECTION("one corner off by (4,0) gives 1") {
    Corners b = a;
    b(0, 2) += 4.0;
    CHECK(meanCornerDistance(a, b) == Approx(1.0));
  }
  SECTION("summary statistics and translation invariance") {
    std::vector<Corners> result, truth;
    for (int i = 0; i < 10; ++i) {
      Corners c = a;
      c.row(0).array() += 0.5 * i;  // growing error 0, 0.5, ..., 4.5
      result.push_back(c);
      truth.push_back(a);
    }
    const EvalSummary s = evaluate(result, truth, std::vector<long>(10, 1500));
    CHECK(s.frames == 10);
    CHECK(s.meanMcd == Approx(2.25));
    CHECK(s.successRate[0] == Approx(0.3));  // 0, 0.5, 1.0 within 1 px
    CHECK(s.successRate[1] == Approx(0.5));
    CHECK(s.successRate[4] == Approx(1.0));
    CHECK(s.meanUpdateMicros == Approx(1500.0));

    // shifting both inputs by the same translation changes nothing
    std::vector<Corners> resultT = result, truthT = truth;
    for (auto& c : resultT) c.row(0).array() += 17.0;
    for (auto& c : truthT) c.row(0).array() += 17.0;
    const EvalSummary s2 = evaluate(resultT, truthT);
    CHECK(s2.meanMcd == Approx(s.meanMcd));
  }
  SECTION("prefix handling") {
    std::vector<Corners> result(7, a), truth(5, a);
    CHECK(evaluate(result, truth).frames == 5);
    CHECK_THROWS_AS(evaluate({}, {}), std::invalid_argument);
  }
}

TEST_CASE("run_tracking") {
  TempDir dir("track");
  const Image base = makeNoiseTexture(200, 200, 21, 4, 32);
  const Corners box = boxCorners(100, 100, 30, 30);

  SECTION("single-frame sequence returns the initialization corners") {
    writePgm((dir.path / "0.pgm").string(), base);
    SequenceSource seq(dir.path.string());
    RunConfig cfg;
    cfg.tracker.sm = "fclk";
    cfg.tracker.config.resX = cfg.tracker.config.resY = 16;
    cfg.initCorners = box;
    const RunResult res = runTracking(seq, cfg);
    REQUIRE(res.corners.size() == 1);
    CHECK((res.corners[0] - box).norm() < 1e-9);
  }

  SECTION("static repeated frame is a fixed point for every gd method") {
    writePgm((dir.path / "frame.pgm").string(), base);
    std::vector<std::string> paths(50, (dir.path / "frame.pgm").string());
    for (const std::string sm : {"iclk", "esm"}) {
      SequenceSource seq(paths);
      RunConfig cfg;
      cfg.tracker.sm = sm;
      cfg.tracker.config.resX = cfg.tracker.config.resY = 16;
      cfg.initCorners = box;
      const RunResult res = runTracking(seq, cfg);
      const std::vector<Corners> truth(50, box);
      const EvalSummary s = evaluate(res.corners, truth);
      INFO(sm);
      CHECK(s.meanMcd < 1e-3);
    }
  }

  SECTION("constant translation drift is tracked to under 0.1 px") {
    // 2 px/frame integer drift: each frame is a pixel-exact shifted copy
    const int frames = 12;
    std::vector<Corners> truth;
    for (int t = 0; t < frames; ++t) {
      Image f(200, 200);
      for (int y = 0; y < 200; ++y)
        for (int x = 0; x < 200; ++x)
          f.at(x, y) = base.at(std::clamp(x - 2 * t, 0, 199), y);
      char name[16];
      std::snprintf(name, sizeof(name), "%03d.pgm", t);
      writePgm((dir.path / name).string(), f);
      Corners c = boxCorners(70, 100, 30, 30);
      c.row(0).array() += 2.0 * t;
      truth.push_back(c);
    }
    SequenceSource seq(dir.path.string());
    RunConfig cfg;
    cfg.tracker.sm = "fclk";
    cfg.tracker.am = "ssd";
    cfg.tracker.ssm = "translation";
    cfg.tracker.config.resX = cfg.tracker.config.resY = 20;
    cfg.initCorners = truth[0];
    cfg.preprocess.sigma = 0.0;
    const RunResult res = runTracking(seq, cfg);
    const EvalSummary s = evaluate(res.corners, truth);
    CHECK(s.perFrameMcd.back() < 0.1);
    CHECK(s.meanMcd < 0.1);
  }
}

TEST_CASE("run_localization") {
  const Image reference = makeNoiseTexture(320, 320, 31, 4, 48);

  SECTION("query equal to the reference gives the identity trajectory") {
    TempDir dir("loc1");
    writePgm((dir.path / "q.pgm").string(), reference);
    SequenceSource seq(dir.path.string());
    RunConfig cfg;
    cfg.tracker.sm = "esm";
    cfg.tracker.config.resX = cfg.tracker.config.resY = 20;
    Corners full;
    full << 0, 319, 319, 0,
            0, 0, 319, 319;
    const RunResult res = runLocalization(seq, reference, full, cfg);
    REQUIRE(res.corners.size() == 1);
    CHECK((res.corners[0] - full).colwise().norm().maxCoeff() < 0.5);
  }

  SECTION("overlapping crops are re-localized step by step") {
    TempDir dir("loc2");
    // crops of a known size sliding right by 6 px per step
    const int cropW = 120, cropH = 120;
    std::vector<Corners> truth;
    HomographySsm sampler;
    for (int t = 0; t < 6; ++t) {
      const double x0 = 60 + 6.0 * t, y0 = 80;
      Corners c;
      c << x0, x0 + cropW - 1, x0 + cropW - 1, x0,
           y0, y0, y0 + cropH - 1, y0 + cropH - 1;
      truth.push_back(c);
      sampler.initialize(c, cropW, cropH);
      const Patch p = samplePatch(reference, sampler.getPts());
      Image crop(cropW, cropH);
      for (int y = 0; y < cropH; ++y)
        for (int x = 0; x < cropW; ++x)
          crop.at(x, y) = p[static_cast<Eigen::Index>(y) * cropW + x];
      char name[16];
      std::snprintf(name, sizeof(name), "%03d.pgm", t);
      writePgm((dir.path / name).string(), crop);
    }
    SequenceSource seq(dir.path.string());
    RunConfig cfg;
    cfg.tracker.sm = "esm";
    cfg.tracker.am = "ssd";
    cfg.tracker.ssm = "homography";
    cfg.tracker.config.resX = cfg.tracker.config.resY = 30;
    cfg.tracker.config.maxIterations = 50;
    const RunResult res = runLocalization(seq, reference, truth[0], cfg);
    REQUIRE(res.corners.size() == truth.size());
    for (size_t t = 0; t < truth.size(); ++t) {
      INFO("step " << t);
      CHECK(meanCornerDistance(res.corners[t], truth[t]) < 2.0);
    }
  }
}

#ifdef WARPTRACK_CLI_PATH
TEST_CASE("cli pipeline: synth, track, eval") {
  TempDir dir("cli");
  const std::string cli = WARPTRACK_CLI_PATH;
  const std::string seqDir = (dir.path / "seq").string();
  const std::string outDir = (dir.path / "out").string();

  auto run = [](const std::string& cmd) { return std::system(cmd.c_str()); };

  REQUIRE(run(cli + " synth --out " + seqDir +
              " --size 220 --frames 8 --ssm homography --corner-rw-sigma 2" +
              " --seed 4 > /dev/null") == 0);
  REQUIRE(fs::exists(fs::path(seqDir) / "gt.txt"));

  // config file provides the search method; the command line overrides it
  const std::string cfgPath = (dir.path / "run.cfg").string();
  std::ofstream(cfgPath) << "sm = falk\nresolution = 24x24\n";
  REQUIRE(run(cli + " track --config " + cfgPath + " --sm esm --seq " + seqDir +
              " --gt " + seqDir + "/gt.txt --out " + outDir + " > /dev/null") ==
          0);
  REQUIRE(fs::exists(fs::path(outDir) / "corners.txt"));

  const auto tracked = readCornersFile((fs::path(outDir) / "corners.txt").string());
  const auto truth = readCornersFile(seqDir + "/gt.txt");
  REQUIRE(tracked.size() == truth.size());
  CHECK(evaluate(tracked, truth).meanMcd < 1.5);

  REQUIRE(run(cli + " eval --result " + outDir + "/corners.txt --gt " + seqDir +
              "/gt.txt > /dev/null") == 0);

  // usage errors exit with 2
  CHECK(run(cli + " track --no-such-flag 2> /dev/null") != 0);
}
#endif
