#pragma once

// Pixel-level operations: sub-pixel patch extraction and numerical image
// derivatives on grayscale images. Everything here is a pure function of
// its inputs and safe to call concurrently on shared images.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "warptrack/common.hpp"

namespace warptrack {

/// Row-major grayscale image with real-valued intensities (nominal [0,255]).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {
    if (w < 2 || h < 2)
      throw std::invalid_argument("Image: width and height must be >= 2");
  }

  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const {
    return data[static_cast<size_t>(y) * width + x];
  }
  bool valid() const {
    return width >= 2 && height >= 2 &&
           data.size() == static_cast<size_t>(width) * height;
  }
};

/// Ordered sampling grid; points are columns (x = column, y = row, origin at
/// the top-left pixel center). Row-major over the canonical grid and never
/// reordered after construction.
struct PointGrid {
  Eigen::Matrix2Xd pts;
  int resX = 0;
  int resY = 0;

  Eigen::Index size() const { return pts.cols(); }
};

using Patch = Vec;

/// Bilinear interpolation at (x, y); coordinates are clamped component-wise
/// to [0, W-1] x [0, H-1] before interpolation.
inline double sampleBilinear(const Image& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = std::min(static_cast<int>(x), img.width - 2);
  const int y0 = std::min(static_cast<int>(y), img.height - 2);
  const double fx = x - x0;
  const double fy = y - y0;
  const double* row0 = img.data.data() + static_cast<size_t>(y0) * img.width + x0;
  const double* row1 = row0 + img.width;
  return (1.0 - fy) * ((1.0 - fx) * row0[0] + fx * row0[1]) +
         fy * ((1.0 - fx) * row1[0] + fx * row1[1]);
}

/// Extracts the patch I(x) at the given grid using bilinear interpolation.
inline Patch samplePatch(const Image& img, const PointGrid& grid) {
  if (!img.valid()) throw std::invalid_argument("samplePatch: invalid image");
  const Eigen::Index n = grid.size();
  if (n == 0) throw std::invalid_argument("samplePatch: empty grid");
  if (!grid.pts.allFinite())
    throw std::invalid_argument("samplePatch: non-finite grid coordinate");
  Patch out(n);
  for (Eigen::Index k = 0; k < n; ++k)
    out[k] = sampleBilinear(img, grid.pts(0, k), grid.pts(1, k));
  return out;
}

/// Numerical gradient of the interpolated image at each grid point:
/// central differences of bilinear samples with the given step.
inline PixGrad pixGrad(const Image& img, const PointGrid& grid,
                       double step = 0.5) {
  if (step <= 0.0) throw std::invalid_argument("pixGrad: step must be > 0");
  if (!img.valid()) throw std::invalid_argument("pixGrad: invalid image");
  if (grid.size() == 0) throw std::invalid_argument("pixGrad: empty grid");
  const Eigen::Index n = grid.size();
  const double inv2h = 1.0 / (2.0 * step);
  PixGrad g(n, 2);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double x = grid.pts(0, k);
    const double y = grid.pts(1, k);
    g(k, 0) = (sampleBilinear(img, x + step, y) -
               sampleBilinear(img, x - step, y)) * inv2h;
    g(k, 1) = (sampleBilinear(img, x, y + step) -
               sampleBilinear(img, x, y - step)) * inv2h;
  }
  return g;
}

/// Numerical spatial Hessian at each grid point: diagonal terms by second
/// central difference, cross term by the 4-point formula (computed once and
/// mirrored, so the 2x2 block is symmetric by construction).
inline PixHess pixHess(const Image& img, const PointGrid& grid,
                       double step = 0.5) {
  if (step <= 0.0) throw std::invalid_argument("pixHess: step must be > 0");
  if (!img.valid()) throw std::invalid_argument("pixHess: invalid image");
  if (grid.size() == 0) throw std::invalid_argument("pixHess: empty grid");
  const Eigen::Index n = grid.size();
  const double invh2 = 1.0 / (step * step);
  const double inv4h2 = 0.25 * invh2;
  PixHess h(n, 3);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double x = grid.pts(0, k);
    const double y = grid.pts(1, k);
    const double c = sampleBilinear(img, x, y);
    h(k, 0) = (sampleBilinear(img, x + step, y) - 2.0 * c +
               sampleBilinear(img, x - step, y)) * invh2;
    h(k, 2) = (sampleBilinear(img, x, y + step) - 2.0 * c +
               sampleBilinear(img, x, y - step)) * invh2;
    h(k, 1) = (sampleBilinear(img, x + step, y + step) -
               sampleBilinear(img, x + step, y - step) -
               sampleBilinear(img, x - step, y + step) +
               sampleBilinear(img, x - step, y - step)) * inv4h2;
  }
  return h;
}

inline Mat2 pixHessBlock(const PixHess& h, Eigen::Index k) {
  Mat2 m;
  m << h(k, 0), h(k, 1), h(k, 1), h(k, 2);
  return m;
}

/// RGB -> grayscale with the usual 0.299/0.587/0.114 weights. Color input is
/// converted at ingestion; everything downstream sees grayscale only.
inline double rgbToGray(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

}  // namespace warptrack
