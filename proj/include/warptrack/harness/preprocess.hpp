#pragma once

// Frame preprocessing: separable Gaussian smoothing with replicated borders.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "warptrack/image.hpp"

namespace warptrack {

inline Image gaussianSmooth(const Image& img, double sigma = 1.0,
                            int ksize = 5) {
  if (sigma <= 0.0) throw std::invalid_argument("gaussianSmooth: sigma <= 0");
  if (ksize < 3 || ksize % 2 == 0)
    throw std::invalid_argument("gaussianSmooth: kernel size must be odd >= 3");
  if (!img.valid()) throw std::invalid_argument("gaussianSmooth: invalid image");

  const int r = ksize / 2;
  std::vector<double> kernel(static_cast<size_t>(ksize));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    kernel[static_cast<size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[static_cast<size_t>(i + r)];
  }
  for (auto& k : kernel) k /= sum;

  const int w = img.width, h = img.height;
  Image tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int xi = std::clamp(x + i, 0, w - 1);
        acc += kernel[static_cast<size_t>(i + r)] * img.at(xi, y);
      }
      tmp.at(x, y) = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int yi = std::clamp(y + i, 0, h - 1);
        acc += kernel[static_cast<size_t>(i + r)] * tmp.at(x, yi);
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

struct PreprocessConfig {
  double sigma = 1.0;  // 0 disables smoothing
  int ksize = 5;
};

inline Image preprocess(const Image& img, const PreprocessConfig& cfg) {
  if (cfg.sigma <= 0.0) return img;
  return gaussianSmooth(img, cfg.sigma, cfg.ksize);
}

}  // namespace warptrack
