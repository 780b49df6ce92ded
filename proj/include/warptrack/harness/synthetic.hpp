#pragma once

// Synthetic benchmark generation: a seeded multi-octave value-noise texture
// and sequences whose region corners random-walk under a chosen warp group.
// Frame t is the base image resampled under the inverse of the warp that
// carries the initial region to its frame-t location, so the ground-truth
// patch content is stationary by construction.

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "warptrack/harness/sequence.hpp"
#include "warptrack/io/corners_io.hpp"
#include "warptrack/io/pnm.hpp"
#include "warptrack/ssm/models.hpp"

namespace warptrack {

/// Smooth random texture in [20, 235] with several octaves of bilinearly
/// upsampled noise.
inline Image makeNoiseTexture(int w, int h, std::uint64_t seed,
                              int octaves = 4, int baseCell = 64) {
  if (w < 2 || h < 2) throw std::invalid_argument("texture: bad size");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Image img(w, h, 0.0);
  double amp = 1.0, ampSum = 0.0;
  int cell = baseCell;
  for (int o = 0; o < octaves; ++o) {
    const int gw = w / cell + 2, gh = h / cell + 2;
    std::vector<double> grid(static_cast<size_t>(gw) * gh);
    for (auto& v : grid) v = uni(rng);
    for (int y = 0; y < h; ++y) {
      const double gy = static_cast<double>(y) / cell;
      const int y0 = static_cast<int>(gy);
      const double fy = gy - y0;
      for (int x = 0; x < w; ++x) {
        const double gx = static_cast<double>(x) / cell;
        const int x0 = static_cast<int>(gx);
        const double fx = gx - x0;
        const double* g0 = grid.data() + static_cast<size_t>(y0) * gw + x0;
        const double* g1 = g0 + gw;
        const double v = (1 - fy) * ((1 - fx) * g0[0] + fx * g0[1]) +
                         fy * ((1 - fx) * g1[0] + fx * g1[1]);
        img.at(x, y) += amp * v;
      }
    }
    ampSum += amp;
    amp *= 0.5;
    cell = std::max(2, cell / 2);
  }
  for (auto& v : img.data) v = 127.5 + 107.5 * (v / ampSum);
  return img;
}

struct SynthConfig {
  std::string ssm = "homography";
  int frames = 100;
  double cornerSigmaPx = 3.0;
  std::uint64_t seed = 0;
  Corners initCorners = Corners::Zero();  // zero -> centered box
  double marginPx = 5.0;
  int maxAttempts = 100;
};

struct SynthSequence {
  std::vector<Image> frames;
  std::vector<Corners> truth;
};

inline Corners centeredBox(const Image& img, double sizeFraction = 0.4) {
  const double cx = 0.5 * (img.width - 1);
  const double cy = 0.5 * (img.height - 1);
  const double hx = 0.5 * sizeFraction * (img.width - 1);
  const double hy = 0.5 * sizeFraction * (img.height - 1);
  Corners c;
  c << cx - hx, cx + hx, cx + hx, cx - hx,
       cy - hy, cy - hy, cy + hy, cy + hy;
  return c;
}

inline Image resampleUnderWarp(const Image& base, const Mat3& warpInv) {
  Image out(base.width, base.height);
  for (int y = 0; y < base.height; ++y) {
    for (int x = 0; x < base.width; ++x) {
      const Vec2 p = detail::applyHomogeneous(warpInv, x, y);
      out.at(x, y) = sampleBilinear(base, p[0], p[1]);
    }
  }
  return out;
}

inline SynthSequence generateSynthetic(const Image& base, const SynthConfig& cfg) {
  if (cfg.frames < 1) throw std::invalid_argument("synth: frames must be >= 1");
  if (cfg.cornerSigmaPx < 0.0) throw std::invalid_argument("synth: negative sigma");
  auto ssm = makeStateSpaceModel(cfg.ssm);
  const Corners c0 =
      cfg.initCorners.isZero(0.0) ? centeredBox(base) : cfg.initCorners;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SynthSequence out;
  out.frames.reserve(static_cast<size_t>(cfg.frames));
  out.truth.reserve(static_cast<size_t>(cfg.frames));
  out.frames.push_back(base);
  out.truth.push_back(c0);

  Corners prev = c0;
  for (int t = 1; t < cfg.frames; ++t) {
    if (cfg.cornerSigmaPx == 0.0) {
      out.frames.push_back(base);
      out.truth.push_back(prev);
      continue;
    }
    Corners next;
    Vec warpState;
    bool ok = false;
    for (int attempt = 0; attempt < cfg.maxAttempts && !ok; ++attempt) {
      Corners proposal = prev;
      if (cfg.cornerSigmaPx > 0.0)
        for (int j = 0; j < 4; ++j) {
          proposal(0, j) += cfg.cornerSigmaPx * gauss(rng);
          proposal(1, j) += cfg.cornerSigmaPx * gauss(rng);
        }
      // project the proposal into the warp group
      Vec state;
      try {
        state = ssm->fitWarp(c0, proposal);
      } catch (const std::exception&) {
        continue;
      }
      const Corners projected = ssm->applyWarpToCorners(c0, state);
      bool inside = true;
      for (int j = 0; j < 4; ++j) {
        if (projected(0, j) < cfg.marginPx ||
            projected(0, j) > base.width - 1 - cfg.marginPx ||
            projected(1, j) < cfg.marginPx ||
            projected(1, j) > base.height - 1 - cfg.marginPx) {
          inside = false;
          break;
        }
      }
      if (!inside) continue;
      next = projected;
      warpState = state;
      ok = true;
    }
    if (!ok)
      throw std::runtime_error("synth: region left the image after " +
                               std::to_string(cfg.maxAttempts) + " attempts");
    const Mat3 g = ssm->paramsToMatrix(warpState);
    out.frames.push_back(resampleUnderWarp(base, g.inverse()));
    out.truth.push_back(next);
    prev = next;
  }
  return out;
}

inline void writeSequence(const std::string& dir, const SynthSequence& seq) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  char name[32];
  for (size_t i = 0; i < seq.frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "%05zu.pgm", i);
    writePgm((fs::path(dir) / name).string(), seq.frames[i]);
  }
  writeCornersFile((fs::path(dir) / "gt.txt").string(), seq.truth);
}

}  // namespace warptrack
