#pragma once

// Normalized cross correlation and its zero-mean SSD realization.
//
// With centered patches c = I - mean(I), unit directions u = c/||c|| and
// ncc = u0 . ut, ZNCC satisfies  -1/2 ||zt - z0||^2 = N (ncc - 1)  for
// z = c * sqrt(N)/||c||, so its derivatives are NCC's scaled by N.

#include <cmath>

#include "warptrack/am/appearance_model.hpp"
#include "warptrack/am/ssd.hpp"

namespace warptrack {

class Ncc : public AppearanceModel {
public:
  std::string name() const override { return "ncc"; }

  double nccValue() const { return ncc_; }

protected:
  virtual double derivScale() const { return 1.0; }
  virtual double valueFromNcc(double ncc) const { return ncc; }

  void initializeImpl() override {
    centerStats(i0_, c0_, n0_, u0_, "template");
  }

  double similarityImpl() override {
    centerStats(ic_, ct_, nt_, ut_, "candidate");
    ncc_ = u0_.dot(ut_);
    return valueFromNcc(ncc_);
  }

  RowVec currGradImpl() override {
    return derivScale() / nt_ * (u0_ - ncc_ * ut_).transpose();
  }

  RowVec initGradImpl() override {
    return derivScale() / n0_ * (ut_ - ncc_ * u0_).transpose();
  }

  Mat currHessOp(const Mat& j) const override {
    Mat jc = j;
    jc.rowwise() -= j.colwise().mean();
    const Vec a = jc.transpose() * u0_;
    const Vec b = jc.transpose() * ut_;
    return derivScale() / (nt_ * nt_) *
           (-(a * b.transpose() + b * a.transpose()) -
            ncc_ * (jc.transpose() * jc) + 3.0 * ncc_ * b * b.transpose());
  }

  Mat initHessOp(const Mat& j) const override {
    Mat jc = j;
    jc.rowwise() -= j.colwise().mean();
    const Vec a = jc.transpose() * u0_;
    const Vec b = jc.transpose() * ut_;
    return derivScale() / (n0_ * n0_) *
           (-(b * a.transpose() + a * b.transpose()) -
            ncc_ * (jc.transpose() * jc) + 3.0 * ncc_ * a * a.transpose());
  }

  // Curvature at the perfect-alignment pair, evaluated with the statistics of
  // the patch whose derivatives were passed (the current one).
  Mat selfHessOp(const Mat& j) const override {
    Mat jc = j;
    jc.rowwise() -= j.colwise().mean();
    const Vec b = jc.transpose() * ut_;
    return derivScale() / (nt_ * nt_) *
           (b * b.transpose() - jc.transpose() * jc);
  }

  Vec distFeature(const Patch& patch) const override {
    Vec c = patch.array() - patch.mean();
    const double n = c.norm();
    if (n / std::sqrt(static_cast<double>(patch.size())) < 1e-8)
      throw DegeneratePatchError("ncc dist feature: zero-variance patch");
    return c / n;
  }

  double dissimilarity() const override { return 1.0 - ncc_; }

  static void centerStats(const Patch& p, Vec& c, double& n, Vec& u,
                          const char* side) {
    c = p.array() - p.mean();
    n = c.norm();
    if (n / std::sqrt(static_cast<double>(p.size())) < 1e-8)
      throw DegeneratePatchError(std::string("ncc: zero-variance ") + side +
                                 " patch");
    u = c / n;
  }

  Vec c0_, u0_, ct_, ut_;
  double n0_ = 0.0, nt_ = 0.0, ncc_ = 0.0;
};

class Zncc : public Ncc {
public:
  std::string name() const override { return "zncc"; }

  double dissimilarityOf(double f) const {
    return -2.0 * f / static_cast<double>(n_);
  }

protected:
  double derivScale() const override { return static_cast<double>(n_); }
  double valueFromNcc(double ncc) const override {
    return static_cast<double>(n_) * (ncc - 1.0);
  }
  double dissimilarity() const override { return dissimilarityOf(f_); }
};

}  // namespace warptrack
