#pragma once

// State space model: a planar warp w(x, p) over a canonical grid, the four
// state-update pathways, warp inversion, the chain-rule pixel-derivative
// interfacing functions, and the stochastic sampler. All concrete models are
// subsets of the planar projective transform and are represented internally
// by 3x3 matrices with h22 normalized to 1.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "warptrack/common.hpp"
#include "warptrack/image.hpp"

namespace warptrack {

struct SamplerConfig {
  Vec stateSigma;        // per-component std deviations, >= 0
  double arCoeff = 0.0;  // first-order auto-regression coefficient in [0,1)
  std::uint64_t seed = 0;
};

enum class WarpFitMethod { LeastSquares, Ransac, Lmeds };

struct WarpFitOptions {
  WarpFitMethod method = WarpFitMethod::LeastSquares;
  double inlierThresholdPx = 2.0;
  int maxIters = 500;
  std::uint64_t seed = 0;
};

struct WarpFitResult {
  Vec state;
  std::vector<char> inlierMask;
  int inlierCount = 0;
};

namespace detail {

inline constexpr double kSingularEps = 1e-12;

inline Vec2 applyHomogeneous(const Mat3& h, double x, double y) {
  const double d = h(2, 0) * x + h(2, 1) * y + h(2, 2);
  if (std::abs(d) < kSingularEps)
    throw SingularWarpError("warp denominator vanishes at grid point");
  return Vec2((h(0, 0) * x + h(0, 1) * y + h(0, 2)) / d,
              (h(1, 0) * x + h(1, 1) * y + h(1, 2)) / d);
}

inline Mat3 normalizeH(Mat3 h) {
  if (std::abs(h(2, 2)) < kSingularEps)
    throw SingularWarpError("h22 vanishes under normalization");
  h /= h(2, 2);
  return h;
}

}  // namespace detail

class StateSpaceModel {
public:
  virtual ~StateSpaceModel() = default;

  virtual int stateSize() const = 0;
  virtual std::string name() const = 0;
  virtual int minimalSampleSize() const = 0;

  /// State vector -> 3x3 warp matrix (h22 = 1).
  virtual Mat3 paramsToMatrix(const Vec& p) const = 0;
  /// 3x3 warp matrix (assumed within the model's subgroup, h22-normalizable)
  /// -> state vector.
  virtual Vec matrixToParams(const Mat3& h) const = 0;

  /// dw/dp at state p, canonical point (x,y); writes a 2 x S block.
  virtual void dwDp(double x, double y, const Vec& p,
                    Eigen::Ref<Mat> out) const = 0;
  /// dw/dx (2x2) at state p, canonical point (x,y).
  virtual Mat2 dwDx(double x, double y, const Vec& p) const = 0;

  /// True when w is linear in p so that d2w/dp2 == 0 (translation,
  /// similitude, affine).
  virtual bool linearInParams() const { return true; }

  /// S x S contraction  sum_c alpha_c * d2w_c/dp2  at state p, point (x,y).
  virtual Mat warpParamHessianContraction(double x, double y, const Vec& p,
                                          const Eigen::RowVector2d& alpha) const {
    (void)x; (void)y; (void)p; (void)alpha;
    return Mat::Zero(stateSize(), stateSize());
  }

  /// 2 x 2 contraction  sum_c alpha_c * d2w_c/dx2  at state p, point (x,y).
  virtual Mat2 warpSpatialHessianContraction(double x, double y, const Vec& p,
                                             const Eigen::RowVector2d& alpha) const {
    (void)x; (void)y; (void)p; (void)alpha;
    return Mat2::Zero();
  }

  /// Least-squares state fit from point correspondences (columns).
  virtual Vec fitWarp(const Eigen::Matrix2Xd& src,
                      const Eigen::Matrix2Xd& dst) const = 0;

  // ---- lifecycle -------------------------------------------------------

  static Corners canonicalCorners() {
    Corners c;
    c << -0.5, 0.5, 0.5, -0.5,
         -0.5, -0.5, 0.5, 0.5;
    return c;
  }

  void initialize(const Corners& corners, int resX, int resY) {
    if (resX < 2 || resY < 2)
      throw std::invalid_argument("ssm: resolution must be at least 2x2");
    checkCorners(corners);
    frameCorners_ = adaptCanonicalFrame(corners);
    grid0_.resX = resX;
    grid0_.resY = resY;
    grid0_.pts.resize(2, static_cast<Eigen::Index>(resX) * resY);
    const double sx = frameCorners_(0, 1) - frameCorners_(0, 0);
    const double sy = frameCorners_(1, 3) - frameCorners_(1, 0);
    Eigen::Index k = 0;
    for (int iy = 0; iy < resY; ++iy) {
      const double y = sy * (-0.5 + static_cast<double>(iy) / (resY - 1));
      for (int ix = 0; ix < resX; ++ix, ++k) {
        grid0_.pts(0, k) = sx * (-0.5 + static_cast<double>(ix) / (resX - 1));
        grid0_.pts(1, k) = y;
      }
    }
    state_ = fitWarp(frameCorners_, corners);
    initState_ = state_;
    initialized_ = true;
    refresh();
  }

  /// Corners of the canonical frame this instance warps; the unit square for
  /// models that can represent scale themselves.
  const Corners& frameCorners() const { return frameCorners_; }

  /// State fitted at initialize; template-side pixel gradients are sampled at
  /// the grid this state produces.
  const Vec& initState() const { requireInit(); return initState_; }

  bool initialized() const { return initialized_; }
  const Vec& getState() const { requireInit(); return state_; }
  const PointGrid& getPts() const { requireInit(); return pts_; }
  const PointGrid& canonicalGrid() const { requireInit(); return grid0_; }
  Corners getCorners() const { requireInit(); return corners_; }

  // ---- warp application ------------------------------------------------

  Vec2 warpPoint(const Vec2& x, const Vec& p) const {
    return detail::applyHomogeneous(paramsToMatrix(p), x[0], x[1]);
  }

  PointGrid applyWarp(const PointGrid& grid, const Vec& p) const {
    if (grid.size() == 0) throw std::invalid_argument("applyWarp: empty grid");
    const Mat3 h = paramsToMatrix(p);
    PointGrid out;
    out.resX = grid.resX;
    out.resY = grid.resY;
    out.pts.resize(2, grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k)
      out.pts.col(k) = detail::applyHomogeneous(h, grid.pts(0, k), grid.pts(1, k));
    return out;
  }

  Corners applyWarpToCorners(const Corners& c, const Vec& p) const {
    const Mat3 h = paramsToMatrix(p);
    Corners out;
    for (int j = 0; j < 4; ++j)
      out.col(j) = detail::applyHomogeneous(h, c(0, j), c(1, j));
    return out;
  }

  // ---- state updates ----------------------------------------------------

  /// p' such that w(x, p') = w(w(x, dp), p_st): the incremental warp acts in
  /// the canonical frame first, then the current warp.
  virtual void compositionalUpdate(const Vec& dp) {
    requireInit();
    state_ = composeStates(state_, dp);
    refresh();
  }

  virtual void additiveUpdate(const Vec& dp) {
    requireInit();
    checkSize(dp, "additiveUpdate");
    state_ += dp;
    validateState(state_);
    refresh();
  }

  virtual void setState(const Vec& p) {
    requireInit();
    checkSize(p, "setState");
    validateState(p);
    state_ = p;
    refresh();
  }

  void setCorners(const Corners& corners) {
    requireInit();
    checkCorners(corners);
    state_ = fitWarp(frameCorners_, corners);
    refresh();
  }

  /// State of w(., p1) o w(., p2), i.e. matrix product H1 * H2.
  Vec composeStates(const Vec& p1, const Vec& p2) const {
    checkSize(p1, "composeStates");
    checkSize(p2, "composeStates");
    const Mat3 h = detail::normalizeH(paramsToMatrix(p1) * paramsToMatrix(p2));
    Vec p = matrixToParams(h);
    validateState(p);
    return p;
  }

  Vec invertState(const Vec& p) const {
    checkSize(p, "invertState");
    const Mat3 h = paramsToMatrix(p);
    if (std::abs(h.determinant()) < detail::kSingularEps)
      throw SingularWarpError("invertState: singular warp matrix");
    return matrixToParams(detail::normalizeH(h.inverse()));
  }

  Vec identityState() const { return Vec::Zero(stateSize()); }

  // ---- chain-rule interfacing (Jacobians) --------------------------------

  /// Row k = grad_k * dw/dp at the current state (forward-additive form).
  Mat cmptPixJacobian(const PixGrad& grad) const {
    requireInit();
    checkGrad(grad);
    const int s = stateSize();
    Mat out(grad.rows(), s);
    Mat dw(2, s);
    for (Eigen::Index k = 0; k < grad.rows(); ++k) {
      dwDp(grid0_.pts(0, k), grid0_.pts(1, k), state_, dw);
      out.row(k) = grad.row(k) * dw;
    }
    return out;
  }

  /// Row k = [grad_k * dw/dx|_{p_st}] * dw/dp|_{identity}: the warped-gradient
  /// forward/inverse-compositional form.
  Mat cmptWarpedPixJacobian(const PixGrad& grad) const {
    requireInit();
    checkGrad(grad);
    const int s = stateSize();
    const Vec id = identityState();
    Mat out(grad.rows(), s);
    Mat dw(2, s);
    for (Eigen::Index k = 0; k < grad.rows(); ++k) {
      const double x = grid0_.pts(0, k);
      const double y = grid0_.pts(1, k);
      const Eigen::RowVector2d wg = grad.row(k) * dwDx(x, y, state_);
      dwDp(x, y, id, dw);
      out.row(k) = wg * dw;
    }
    return out;
  }

  /// Inverse-additive approximation: the template gradient (sampled in image
  /// space at the init grid) is first carried into the canonical frame
  /// through dw/dx at the init state, then substituted for the warped
  /// current gradient via (dw/dx)^-1 * dw/dp at the current state.
  Mat cmptApproxPixJacobian(const PixGrad& grad0) const {
    requireInit();
    checkGrad(grad0);
    const int s = stateSize();
    Mat out(grad0.rows(), s);
    Mat dw(2, s);
    for (Eigen::Index k = 0; k < grad0.rows(); ++k) {
      const double x = grid0_.pts(0, k);
      const double y = grid0_.pts(1, k);
      const Mat2 jx = dwDx(x, y, state_);
      const double det = jx.determinant();
      if (std::abs(det) < detail::kSingularEps)
        throw SingularWarpError("cmptApproxPixJacobian: singular dw/dx");
      const Eigen::RowVector2d g0c = grad0.row(k) * dwDx(x, y, initState_);
      const Eigen::RowVector2d wg = g0c * jx.inverse();
      dwDp(x, y, state_, dw);
      out.row(k) = wg * dw;
    }
    return out;
  }

  // ---- chain-rule interfacing (pixel Hessians) ---------------------------
  // Output layout: S*S x N, column k = vec of the S x S matrix for point k.

  PixHessTensor cmptPixHessian(const PixGrad& grad, const PixHess& hess) const {
    requireInit();
    checkGrad(grad);
    checkHess(hess, grad.rows());
    const int s = stateSize();
    PixHessTensor out(s * s, grad.rows());
    Mat dw(2, s);
    for (Eigen::Index k = 0; k < grad.rows(); ++k) {
      const double x = grid0_.pts(0, k);
      const double y = grid0_.pts(1, k);
      dwDp(x, y, state_, dw);
      Mat m = dw.transpose() * pixHessBlock(hess, k) * dw;
      if (!linearInParams())
        m += warpParamHessianContraction(x, y, state_, grad.row(k));
      out.col(k) = Eigen::Map<const Vec>(m.data(), s * s);
    }
    return out;
  }

  PixHessTensor cmptWarpedPixHessian(const PixGrad& grad,
                                     const PixHess& hess) const {
    requireInit();
    checkGrad(grad);
    checkHess(hess, grad.rows());
    const int s = stateSize();
    const Vec id = identityState();
    PixHessTensor out(s * s, grad.rows());
    Mat dw0(2, s);
    for (Eigen::Index k = 0; k < grad.rows(); ++k) {
      const double x = grid0_.pts(0, k);
      const double y = grid0_.pts(1, k);
      const Mat2 jx = dwDx(x, y, state_);
      Mat2 hw = jx.transpose() * pixHessBlock(hess, k) * jx;
      if (!linearInParams())
        hw += warpSpatialHessianContraction(x, y, state_, grad.row(k));
      const Eigen::RowVector2d wg = grad.row(k) * jx;
      dwDp(x, y, id, dw0);
      Mat m = dw0.transpose() * hw * dw0;
      if (!linearInParams())
        m += warpParamHessianContraction(x, y, id, wg);
      out.col(k) = Eigen::Map<const Vec>(m.data(), s * s);
    }
    return out;
  }

  PixHessTensor cmptApproxPixHessian(const PixGrad& grad0,
                                     const PixHess& hess0) const {
    requireInit();
    checkGrad(grad0);
    checkHess(hess0, grad0.rows());
    const int s = stateSize();
    PixHessTensor out(s * s, grad0.rows());
    Mat dw(2, s);
    for (Eigen::Index k = 0; k < grad0.rows(); ++k) {
      const double x = grid0_.pts(0, k);
      const double y = grid0_.pts(1, k);
      const Mat2 jx = dwDx(x, y, state_);
      const double det = jx.determinant();
      if (std::abs(det) < detail::kSingularEps)
        throw SingularWarpError("cmptApproxPixHessian: singular dw/dx");
      const Mat2 jxi = jx.inverse();
      // template derivatives carried into the canonical frame
      const Mat2 jx0 = dwDx(x, y, initState_);
      const Eigen::RowVector2d g0c = grad0.row(k) * jx0;
      Mat2 h0c = jx0.transpose() * pixHessBlock(hess0, k) * jx0;
      if (!linearInParams())
        h0c += warpSpatialHessianContraction(x, y, initState_, grad0.row(k));
      const Eigen::RowVector2d ag = g0c * jxi;
      Mat2 inner = h0c;
      if (!linearInParams())
        inner -= warpSpatialHessianContraction(x, y, state_, ag);
      const Mat2 hcur = jxi.transpose() * inner * jxi;
      dwDp(x, y, state_, dw);
      Mat m = dw.transpose() * hcur * dw;
      if (!linearInParams())
        m += warpParamHessianContraction(x, y, state_, ag);
      out.col(k) = Eigen::Map<const Vec>(m.data(), s * s);
    }
    return out;
  }

  // ---- stochastic sampler ------------------------------------------------

  void initializeSampler(const SamplerConfig& cfg) {
    if (cfg.stateSigma.size() != stateSize())
      throw std::invalid_argument("sampler: sigma size mismatch");
    if ((cfg.stateSigma.array() < 0.0).any())
      throw std::invalid_argument("sampler: negative sigma");
    if (cfg.arCoeff < 0.0 || cfg.arCoeff >= 1.0)
      throw std::invalid_argument("sampler: arCoeff must be in [0,1)");
    sampler_ = cfg;
    rng_.seed(cfg.seed);
    samplerReady_ = true;
  }

  bool samplerReady() const { return samplerReady_; }

  Vec generatePerturbation() {
    if (!samplerReady_) throw CallOrderError("sampler not initialized");
    const int s = stateSize();
    Vec eps = Vec::Zero(s);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < s; ++i) {
      const double sig = sampler_.stateSigma[i];
      if (sig > 0.0) eps[i] = sig * gauss(rng_);
    }
    return eps;
  }

  Vec additiveRandomWalk(const Vec& p) {
    checkSize(p, "additiveRandomWalk");
    return p + generatePerturbation();
  }

  Vec compositionalRandomWalk(const Vec& p) {
    checkSize(p, "compositionalRandomWalk");
    return composeStates(p, generatePerturbation());
  }

  Vec additiveAutoRegression1(const Vec& p, const Vec& pPrev) {
    checkSize(p, "additiveAutoRegression1");
    checkSize(pPrev, "additiveAutoRegression1");
    return p + sampler_.arCoeff * (p - pPrev) + generatePerturbation();
  }

  /// Heuristic per-component sigma: corner_sigma / (mean corner displacement
  /// per unit compositional perturbation of that component). The sensitivity
  /// is measured by a central difference so that strongly nonlinear
  /// components (projective terms) are scaled by their local response.
  Vec estimateStateSigma(double cornerSigmaPx) const {
    requireInit();
    if (cornerSigmaPx <= 0.0)
      throw std::invalid_argument("estimateStateSigma: sigma must be > 0");
    const int s = stateSize();
    const Corners cc = frameCorners_;
    const double delta = 1e-3;
    Vec sigma(s);
    for (int i = 0; i < s; ++i) {
      Vec ei = Vec::Zero(s);
      ei[i] = delta;
      const Corners plus = applyWarpToCorners(cc, composeStates(state_, ei));
      ei[i] = -delta;
      const Corners minus = applyWarpToCorners(cc, composeStates(state_, ei));
      const double m =
          ((plus - minus) / (2.0 * delta)).colwise().norm().mean();
      if (m < detail::kSingularEps)
        throw DegenerateParameterizationError(
            "estimateStateSigma: component produces no corner motion");
      sigma[i] = cornerSigmaPx / m;
    }
    return sigma;
  }

  Vec estimateMeanOfSamples(const std::vector<Vec>& samples,
                            const Vec& weights) const {
    if (samples.empty()) throw std::invalid_argument("mean: empty sample set");
    if (weights.size() != static_cast<Eigen::Index>(samples.size()))
      throw std::invalid_argument("mean: weight count mismatch");
    if ((weights.array() < 0.0).any())
      throw std::invalid_argument("mean: negative weight");
    const double total = weights.sum();
    if (total <= 0.0) throw std::invalid_argument("mean: zero weight sum");
    Vec mean = Vec::Zero(stateSize());
    for (size_t i = 0; i < samples.size(); ++i) {
      checkSize(samples[i], "estimateMeanOfSamples");
      mean += weights[static_cast<Eigen::Index>(i)] * samples[i];
    }
    return mean / total;
  }

  // ---- robust warp fitting ------------------------------------------------

  WarpFitResult estimateWarpFromPts(const Eigen::Matrix2Xd& src,
                                    const Eigen::Matrix2Xd& dst,
                                    const WarpFitOptions& opt = {}) const {
    const Eigen::Index m = src.cols();
    if (dst.cols() != m)
      throw std::invalid_argument("estimateWarpFromPts: size mismatch");
    const int minSize = minimalSampleSize();
    if (m < minSize)
      throw std::invalid_argument("estimateWarpFromPts: insufficient points");

    if (opt.method == WarpFitMethod::LeastSquares) {
      WarpFitResult res;
      res.state = fitWarp(src, dst);
      res.inlierMask.assign(static_cast<size_t>(m), 1);
      res.inlierCount = static_cast<int>(m);
      return res;
    }

    std::mt19937_64 rng(opt.seed);
    std::vector<Eigen::Index> idx(static_cast<size_t>(m));
    std::iota(idx.begin(), idx.end(), 0);

    Vec bestState;
    double bestScore = std::numeric_limits<double>::infinity();
    int bestCount = -1;
    const double thr2 = opt.inlierThresholdPx * opt.inlierThresholdPx;

    Eigen::Matrix2Xd ssrc(2, minSize), sdst(2, minSize);
    std::vector<double> r2(static_cast<size_t>(m));
    for (int it = 0; it < opt.maxIters; ++it) {
      // minimal sample without replacement
      for (int j = 0; j < minSize; ++j) {
        std::uniform_int_distribution<Eigen::Index> pick(j, m - 1);
        std::swap(idx[static_cast<size_t>(j)], idx[static_cast<size_t>(pick(rng))]);
        ssrc.col(j) = src.col(idx[static_cast<size_t>(j)]);
        sdst.col(j) = dst.col(idx[static_cast<size_t>(j)]);
      }
      Vec cand;
      try {
        cand = fitWarp(ssrc, sdst);
      } catch (const std::exception&) {
        continue;  // degenerate sample
      }
      if (!residuals2(cand, src, dst, r2)) continue;

      if (opt.method == WarpFitMethod::Ransac) {
        int count = 0;
        double errSum = 0.0;
        for (double v : r2)
          if (v <= thr2) { ++count; errSum += v; }
        if (count > bestCount ||
            (count == bestCount && errSum < bestScore)) {
          bestCount = count;
          bestScore = errSum;
          bestState = cand;
        }
      } else {  // LMedS
        std::vector<double> sorted(r2);
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                         sorted.end());
        const double med = sorted[sorted.size() / 2];
        if (med < bestScore) {
          bestScore = med;
          bestState = cand;
          bestCount = 0;  // filled below
        }
      }
    }
    if (bestState.size() == 0)
      throw NoConsensusError("estimateWarpFromPts: no valid hypothesis");

    double thr2Final = thr2;
    if (opt.method == WarpFitMethod::Lmeds) {
      const double sig = 1.4826 * (1.0 + 5.0 / (static_cast<double>(m) - minSize)) *
                         std::sqrt(std::max(bestScore, 0.0));
      thr2Final = (2.5 * sig) * (2.5 * sig);
      thr2Final = std::max(thr2Final, 1e-12);
    }
    residuals2(bestState, src, dst, r2);
    std::vector<char> mask(static_cast<size_t>(m), 0);
    Eigen::Index nin = 0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (r2[static_cast<size_t>(i)] <= thr2Final) { mask[static_cast<size_t>(i)] = 1; ++nin; }
    if (nin < minSize)
      throw NoConsensusError("estimateWarpFromPts: consensus below minimal size");

    Eigen::Matrix2Xd isrc(2, nin), idst(2, nin);
    Eigen::Index j = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (mask[static_cast<size_t>(i)]) {
        isrc.col(j) = src.col(i);
        idst.col(j) = dst.col(i);
        ++j;
      }
    }
    WarpFitResult res;
    res.state = fitWarp(isrc, idst);
    // final mask re-scored with the refit model
    if (residuals2(res.state, src, dst, r2)) {
      res.inlierMask.assign(static_cast<size_t>(m), 0);
      res.inlierCount = 0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (r2[static_cast<size_t>(i)] <= thr2Final) {
          res.inlierMask[static_cast<size_t>(i)] = 1;
          ++res.inlierCount;
        }
      }
    } else {
      res.inlierMask = mask;
      res.inlierCount = static_cast<int>(nin);
    }
    return res;
  }

protected:
  void refresh() {
    const Mat3 h = paramsToMatrix(state_);
    pts_.resX = grid0_.resX;
    pts_.resY = grid0_.resY;
    pts_.pts.resize(2, grid0_.size());
    for (Eigen::Index k = 0; k < grid0_.size(); ++k)
      pts_.pts.col(k) =
          detail::applyHomogeneous(h, grid0_.pts(0, k), grid0_.pts(1, k));
    for (int j = 0; j < 4; ++j)
      corners_.col(j) =
          detail::applyHomogeneous(h, frameCorners_(0, j), frameCorners_(1, j));
  }

  /// Hook for models that cannot represent the region's shape themselves:
  /// returns the canonical-frame corners this instance should warp.
  virtual Corners adaptCanonicalFrame(const Corners& corners) {
    (void)corners;
    return canonicalCorners();
  }

  virtual void validateState(const Vec& p) const {
    if (!p.allFinite())
      throw std::invalid_argument("state vector has non-finite entries");
  }

  void requireInit() const {
    if (!initialized_) throw CallOrderError("ssm not initialized");
  }

  void checkSize(const Vec& p, const char* where) const {
    if (p.size() != stateSize())
      throw std::invalid_argument(std::string(where) + ": state size mismatch");
  }

  void checkGrad(const PixGrad& grad) const {
    if (grad.rows() != grid0_.size())
      throw std::invalid_argument("pixel gradient row count mismatch");
  }

  void checkHess(const PixHess& hess, Eigen::Index n) const {
    if (hess.rows() != n)
      throw std::invalid_argument("pixel hessian row count mismatch");
  }

  static void checkCorners(const Corners& c) {
    if (!c.allFinite())
      throw std::invalid_argument("corners: non-finite coordinates");
    // reject collinear triples
    for (int j = 0; j < 4; ++j) {
      const Vec2 a = c.col((j + 1) % 4) - c.col(j);
      const Vec2 b = c.col((j + 2) % 4) - c.col(j);
      const double cross = a.x() * b.y() - a.y() * b.x();
      const double scale = std::max(a.norm(), b.norm());
      if (std::abs(cross) <= 1e-9 * std::max(1.0, scale * scale))
        throw std::invalid_argument("corners: degenerate (collinear) quad");
    }
  }

  bool residuals2(const Vec& p, const Eigen::Matrix2Xd& src,
                  const Eigen::Matrix2Xd& dst, std::vector<double>& out) const {
    Mat3 h;
    try {
      h = paramsToMatrix(p);
    } catch (const std::exception&) {
      return false;
    }
    for (Eigen::Index i = 0; i < src.cols(); ++i) {
      const double d = h(2, 0) * src(0, i) + h(2, 1) * src(1, i) + h(2, 2);
      if (std::abs(d) < detail::kSingularEps) return false;
      const double u = (h(0, 0) * src(0, i) + h(0, 1) * src(1, i) + h(0, 2)) / d;
      const double v = (h(1, 0) * src(0, i) + h(1, 1) * src(1, i) + h(1, 2)) / d;
      const double du = u - dst(0, i);
      const double dv = v - dst(1, i);
      out[static_cast<size_t>(i)] = du * du + dv * dv;
    }
    return true;
  }

  PointGrid grid0_;   // canonical grid (unit square scaled by frameCorners_)
  Corners frameCorners_ = canonicalCorners();
  PointGrid pts_;     // current warped grid, image coordinates
  Corners corners_ = Corners::Zero();
  Vec state_;
  Vec initState_;
  bool initialized_ = false;

  SamplerConfig sampler_;
  std::mt19937_64 rng_;
  bool samplerReady_ = false;
};

}  // namespace warptrack
