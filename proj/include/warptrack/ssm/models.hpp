#pragma once

// Concrete planar warp models. State parameterizations:
//   translation  S=2  (tx, ty)
//   similitude   S=4  (tx, ty, a, b)   linear part [[1+a, -b], [b, 1+a]]
//   affine       S=6  row-major offsets of the upper 2x3 block from identity
//   homography   S=8  entries of H - I (row-major, h22 fixed to 1)
// The zero vector is the identity warp for every model.

#include <Eigen/SVD>

#include <memory>
#include <stdexcept>
#include <string>

#include "warptrack/ssm/state_space_model.hpp"

namespace warptrack {

class TranslationSsm : public StateSpaceModel {
public:
  int stateSize() const override { return 2; }
  std::string name() const override { return "translation"; }
  int minimalSampleSize() const override { return 1; }

protected:
  // A pure translation cannot represent the region's size, so the canonical
  // frame keeps the least-squares axis-aligned scale of the given corners
  // and the state stays a bare translation on top of it.
  Corners adaptCanonicalFrame(const Corners& c) override {
    const Corners cc = canonicalCorners();
    double sx = 0.0, sy = 0.0;
    for (int j = 0; j < 4; ++j) {
      sx += cc(0, j) * (c(0, j) - c.row(0).mean());
      sy += cc(1, j) * (c(1, j) - c.row(1).mean());
    }
    // sum of cc coordinates squared is 1 per axis
    sx = std::max(std::abs(sx), 1.0);
    sy = std::max(std::abs(sy), 1.0);
    Corners out = cc;
    out.row(0) *= sx;
    out.row(1) *= sy;
    return out;
  }

public:

  Mat3 paramsToMatrix(const Vec& p) const override {
    checkSize(p, "paramsToMatrix");
    Mat3 h = Mat3::Identity();
    h(0, 2) = p[0];
    h(1, 2) = p[1];
    return h;
  }

  Vec matrixToParams(const Mat3& h) const override {
    Vec p(2);
    p << h(0, 2), h(1, 2);
    return p;
  }

  void dwDp(double, double, const Vec&, Eigen::Ref<Mat> out) const override {
    out.setIdentity();
  }

  Mat2 dwDx(double, double, const Vec&) const override {
    return Mat2::Identity();
  }

  Vec fitWarp(const Eigen::Matrix2Xd& src,
              const Eigen::Matrix2Xd& dst) const override {
    if (src.cols() < 1) throw std::invalid_argument("fitWarp: no points");
    return (dst - src).rowwise().mean();
  }
};

class SimilitudeSsm : public StateSpaceModel {
public:
  int stateSize() const override { return 4; }
  std::string name() const override { return "similitude"; }
  int minimalSampleSize() const override { return 2; }

  Mat3 paramsToMatrix(const Vec& p) const override {
    checkSize(p, "paramsToMatrix");
    Mat3 h = Mat3::Identity();
    h(0, 0) = 1.0 + p[2];
    h(0, 1) = -p[3];
    h(1, 0) = p[3];
    h(1, 1) = 1.0 + p[2];
    h(0, 2) = p[0];
    h(1, 2) = p[1];
    return h;
  }

  Vec matrixToParams(const Mat3& h) const override {
    Vec p(4);
    p << h(0, 2), h(1, 2), h(0, 0) - 1.0, h(1, 0);
    return p;
  }

  void dwDp(double x, double y, const Vec&, Eigen::Ref<Mat> out) const override {
    out << 1, 0, x, -y,
           0, 1, y, x;
  }

  Mat2 dwDx(double, double, const Vec& p) const override {
    Mat2 m;
    m << 1.0 + p[2], -p[3], p[3], 1.0 + p[2];
    return m;
  }

  Vec fitWarp(const Eigen::Matrix2Xd& src,
              const Eigen::Matrix2Xd& dst) const override {
    const Eigen::Index m = src.cols();
    if (m < 2) throw std::invalid_argument("fitWarp: need >= 2 points");
    // (u - x) = a*x - b*y + tx ; (v - y) = b*x + a*y + ty  -> linear LS
    Mat a(2 * m, 4);
    Vec rhs(2 * m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double x = src(0, i), y = src(1, i);
      a.row(2 * i) << 1, 0, x, -y;
      a.row(2 * i + 1) << 0, 1, y, x;
      rhs[2 * i] = dst(0, i) - x;
      rhs[2 * i + 1] = dst(1, i) - y;
    }
    return a.colPivHouseholderQr().solve(rhs);
  }
};

class AffineSsm : public StateSpaceModel {
public:
  int stateSize() const override { return 6; }
  std::string name() const override { return "affine"; }
  int minimalSampleSize() const override { return 3; }

  Mat3 paramsToMatrix(const Vec& p) const override {
    checkSize(p, "paramsToMatrix");
    Mat3 h = Mat3::Identity();
    h(0, 0) += p[0]; h(0, 1) += p[1]; h(0, 2) += p[2];
    h(1, 0) += p[3]; h(1, 1) += p[4]; h(1, 2) += p[5];
    return h;
  }

  Vec matrixToParams(const Mat3& h) const override {
    Vec p(6);
    p << h(0, 0) - 1.0, h(0, 1), h(0, 2),
         h(1, 0), h(1, 1) - 1.0, h(1, 2);
    return p;
  }

  void dwDp(double x, double y, const Vec&, Eigen::Ref<Mat> out) const override {
    out << x, y, 1, 0, 0, 0,
           0, 0, 0, x, y, 1;
  }

  Mat2 dwDx(double, double, const Vec& p) const override {
    Mat2 m;
    m << 1.0 + p[0], p[1], p[3], 1.0 + p[4];
    return m;
  }

  Vec fitWarp(const Eigen::Matrix2Xd& src,
              const Eigen::Matrix2Xd& dst) const override {
    const Eigen::Index m = src.cols();
    if (m < 3) throw std::invalid_argument("fitWarp: need >= 3 points");
    Mat a(m, 3);
    for (Eigen::Index i = 0; i < m; ++i)
      a.row(i) << src(0, i), src(1, i), 1.0;
    const auto qr = a.colPivHouseholderQr();
    if (qr.rank() < 3)
      throw std::invalid_argument("fitWarp: collinear points");
    const Vec ru = qr.solve(dst.row(0).transpose());
    const Vec rv = qr.solve(dst.row(1).transpose());
    Vec p(6);
    p << ru[0] - 1.0, ru[1], ru[2], rv[0], rv[1] - 1.0, rv[2];
    return p;
  }
};

class HomographySsm : public StateSpaceModel {
public:
  int stateSize() const override { return 8; }
  std::string name() const override { return "homography"; }
  int minimalSampleSize() const override { return 4; }
  bool linearInParams() const override { return false; }

  Mat3 paramsToMatrix(const Vec& p) const override {
    checkSize(p, "paramsToMatrix");
    Mat3 h;
    h << 1.0 + p[0], p[1], p[2],
         p[3], 1.0 + p[4], p[5],
         p[6], p[7], 1.0;
    return h;
  }

  Vec matrixToParams(const Mat3& hIn) const override {
    const Mat3 h = detail::normalizeH(hIn);
    Vec p(8);
    p << h(0, 0) - 1.0, h(0, 1), h(0, 2),
         h(1, 0), h(1, 1) - 1.0, h(1, 2),
         h(2, 0), h(2, 1);
    return p;
  }

  void dwDp(double x, double y, const Vec& p, Eigen::Ref<Mat> out) const override {
    const double d = p[6] * x + p[7] * y + 1.0;
    if (std::abs(d) < detail::kSingularEps)
      throw SingularWarpError("dwDp: warp denominator vanishes");
    const double invD = 1.0 / d;
    const double u = ((1.0 + p[0]) * x + p[1] * y + p[2]) * invD;
    const double v = (p[3] * x + (1.0 + p[4]) * y + p[5]) * invD;
    out << x * invD, y * invD, invD, 0, 0, 0, -u * x * invD, -u * y * invD,
           0, 0, 0, x * invD, y * invD, invD, -v * x * invD, -v * y * invD;
  }

  Mat2 dwDx(double x, double y, const Vec& p) const override {
    const double d = p[6] * x + p[7] * y + 1.0;
    if (std::abs(d) < detail::kSingularEps)
      throw SingularWarpError("dwDx: warp denominator vanishes");
    const double invD = 1.0 / d;
    const double u = ((1.0 + p[0]) * x + p[1] * y + p[2]) * invD;
    const double v = (p[3] * x + (1.0 + p[4]) * y + p[5]) * invD;
    Mat2 m;
    m << ((1.0 + p[0]) - u * p[6]) * invD, (p[1] - u * p[7]) * invD,
         (p[3] - v * p[6]) * invD, ((1.0 + p[4]) - v * p[7]) * invD;
    return m;
  }

  // d2u/dpi dpj = -(Di * du/dpj + Dj * du/dpi)/D with D = p6*x + p7*y + 1,
  // so the gradient-weighted contraction collapses to a rank-2 update.
  Mat warpParamHessianContraction(double x, double y, const Vec& p,
                                  const Eigen::RowVector2d& alpha) const override {
    const double d = p[6] * x + p[7] * y + 1.0;
    if (std::abs(d) < detail::kSingularEps)
      throw SingularWarpError("warpParamHessianContraction: denominator vanishes");
    Mat dw(2, 8);
    dwDp(x, y, p, dw);
    RowVec m = alpha * dw;                 // 1 x 8
    Vec dvec = Vec::Zero(8);
    dvec[6] = x;
    dvec[7] = y;
    return -(dvec * m + m.transpose() * dvec.transpose()) / d;
  }

  Mat2 warpSpatialHessianContraction(double x, double y, const Vec& p,
                                     const Eigen::RowVector2d& alpha) const override {
    const double d = p[6] * x + p[7] * y + 1.0;
    if (std::abs(d) < detail::kSingularEps)
      throw SingularWarpError("warpSpatialHessianContraction: denominator vanishes");
    const Eigen::RowVector2d m = alpha * dwDx(x, y, p);
    Vec2 dvec(p[6], p[7]);
    return -(dvec * m + m.transpose() * dvec.transpose()) / d;
  }

  /// Normalized direct linear transform; exact for 4 correspondences,
  /// least-squares for more.
  Vec fitWarp(const Eigen::Matrix2Xd& src,
              const Eigen::Matrix2Xd& dst) const override {
    const Eigen::Index m = src.cols();
    if (m < 4) throw std::invalid_argument("fitWarp: need >= 4 points");
    const Mat3 tSrc = normalizing(src);
    const Mat3 tDst = normalizing(dst);
    Mat a(2 * m, 9);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vec3 s = tSrc * Vec3(src(0, i), src(1, i), 1.0);
      const Vec3 t = tDst * Vec3(dst(0, i), dst(1, i), 1.0);
      const double x = s[0], y = s[1], u = t[0], v = t[1];
      a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
      a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y, -v;
    }
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
    if (svd.rank() < 8)
      throw std::invalid_argument("fitWarp: degenerate configuration");
    const Vec h = svd.matrixV().col(8);
    Mat3 hn;
    hn << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
    const Mat3 full = tDst.inverse() * hn * tSrc;
    if (std::abs(full(2, 2)) < detail::kSingularEps ||
        std::abs(full.determinant()) < detail::kSingularEps)
      throw std::invalid_argument("fitWarp: singular homography");
    return matrixToParams(full);
  }

private:
  void validateState(const Vec& p) const override {
    StateSpaceModel::validateState(p);
    if (std::abs(paramsToMatrix(p).determinant()) <= detail::kSingularEps)
      throw SingularWarpError("homography state is singular");
  }

  static Mat3 normalizing(const Eigen::Matrix2Xd& pts) {
    const Vec2 centroid = pts.rowwise().mean();
    const double meanDist =
        (pts.colwise() - centroid).colwise().norm().mean();
    const double scale = meanDist > 1e-15 ? std::sqrt(2.0) / meanDist : 1.0;
    Mat3 t = Mat3::Identity();
    t(0, 0) = scale;
    t(1, 1) = scale;
    t(0, 2) = -scale * centroid.x();
    t(1, 2) = -scale * centroid.y();
    return t;
  }
};

inline std::unique_ptr<StateSpaceModel> makeStateSpaceModel(const std::string& name) {
  if (name == "translation" || name == "2") return std::make_unique<TranslationSsm>();
  if (name == "similitude" || name == "4") return std::make_unique<SimilitudeSsm>();
  if (name == "affine" || name == "6") return std::make_unique<AffineSsm>();
  if (name == "homography" || name == "8") return std::make_unique<HomographySsm>();
  throw std::invalid_argument("unknown state space model: " + name);
}

}  // namespace warptrack
