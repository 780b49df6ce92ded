#pragma once

// Appearance model contract: similarity f between the template patch and a
// candidate patch, its gradients w.r.t. both patches, chain-rule interfacing
// functions, Self-Hessian variants, distance features for index search, and
// likelihoods for particle filtering.
//
// Operations have transitive dependencies and fail fast when called out of
// order: pixel values -> similarity -> gradients -> interfacing functions.
// The template patch is frozen after initialization.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "warptrack/am/illumination.hpp"
#include "warptrack/common.hpp"
#include "warptrack/image.hpp"

namespace warptrack {

class AppearanceModel {
public:
  virtual ~AppearanceModel() = default;
  virtual std::string name() const = 0;

  // ---- pixel values (ImageBase surface used by search methods) -----------

  virtual void setCurrentFrame(const Image& frame) { frame_ = &frame; }
  const Image* currentFrame() const { return frame_; }

  /// Samples the template patch from the current frame and initializes the
  /// model. Equivalent to initialize(samplePatch(frame, pts)).
  virtual void initializePixVals(const PointGrid& pts) {
    requireFrame();
    initialize(samplePatch(*frame_, pts));
  }

  virtual void updatePixVals(const PointGrid& pts) {
    requireFrame();
    setCurrPatch(samplePatch(*frame_, pts));
  }

  void initializePixGrad(const PointGrid& pts) {
    requireFrame();
    initGradPix_ = pixGrad(*frame_, pts, gradStep_);
  }

  void updatePixGrad(const PointGrid& pts) {
    requireFrame();
    currGradPix_ = pixGrad(*frame_, pts, gradStep_);
  }

  void initializePixHess(const PointGrid& pts) {
    requireFrame();
    initHessPix_ = pixHess(*frame_, pts, gradStep_);
  }

  void updatePixHess(const PointGrid& pts) {
    requireFrame();
    currHessPix_ = pixHess(*frame_, pts, gradStep_);
  }

  const PixGrad& getInitPixGrad() const { return initGradPix_; }
  const PixGrad& getCurrPixGrad() const { return currGradPix_; }
  const PixHess& getInitPixHess() const { return initHessPix_; }
  const PixHess& getCurrPixHess() const { return currHessPix_; }

  // ---- similarity ----------------------------------------------------------

  /// Stores the template patch, computes model statistics, and evaluates the
  /// self-similarity f(I0, I0).
  void initialize(const Patch& patch) {
    if (patch.size() < 1 || !patch.allFinite())
      throw std::invalid_argument("am initialize: invalid patch");
    n_ = patch.size();
    i0_ = patch;
    rawCurr_ = patch;
    if (ilm_) pa_ = ilm_->identityParams();
    initializeImpl();
    mapCurrent();
    f_ = similarityImpl();
    hasTemplate_ = true;
    hasCurr_ = true;
    simCurrent_ = true;
    initGradCurrent_ = currGradCurrent_ = false;
  }

  bool initialized() const { return hasTemplate_; }
  Eigen::Index patchSize() const { return n_; }
  const Patch& getInitPatch() const { return i0_; }
  const Patch& getCurrPatch() const { return ic_; }
  const Patch& getRawCurrPatch() const { return rawCurr_; }

  /// Submits a new candidate patch; invalidates similarity and gradients.
  void setCurrPatch(const Patch& patch) {
    requireTemplate();
    if (patch.size() != n_)
      throw std::invalid_argument("setCurrPatch: patch length mismatch");
    if (!patch.allFinite())
      throw std::invalid_argument("setCurrPatch: non-finite patch");
    rawCurr_ = patch;
    mapCurrent();
    simCurrent_ = initGradCurrent_ = currGradCurrent_ = false;
    hasCurr_ = true;
  }

  /// Refreshes model statistics for the stored candidate and returns f.
  double updateSimilarity() {
    requireTemplate();
    if (!hasCurr_) throw CallOrderError("updateSimilarity before pixel values");
    f_ = similarityImpl();
    simCurrent_ = true;
    initGradCurrent_ = currGradCurrent_ = false;
    return f_;
  }

  double updateSimilarity(const Patch& patch) {
    setCurrPatch(patch);
    return updateSimilarity();
  }

  double getSimilarity() const {
    if (!simCurrent_) throw CallOrderError("similarity not current");
    return f_;
  }

  // ---- gradients ------------------------------------------------------------

  const RowVec& updateInitGrad() {
    requireSimilarity("updateInitGrad");
    initGrad_ = initGradImpl();
    initGradCurrent_ = true;
    return initGrad_;
  }

  const RowVec& updateCurrGrad() {
    requireSimilarity("updateCurrGrad");
    currGrad_ = currGradImpl();
    currGradCurrent_ = true;
    return currGrad_;
  }

  const RowVec& getInitGrad() const {
    if (!initGradCurrent_) throw CallOrderError("init grad not current");
    return initGrad_;
  }

  const RowVec& getCurrGrad() const {
    if (!currGradCurrent_) throw CallOrderError("curr grad not current");
    return currGrad_;
  }

  // ---- chain-rule interfacing -------------------------------------------------

  int ilmParamCount() const { return ilm_ ? ilm_->paramCount() : 0; }
  bool hasIlm() const { return ilm_ != nullptr; }

  void setIlluminationModel(std::shared_ptr<IlluminationModel> ilm) {
    if (hasTemplate_)
      throw CallOrderError("illumination model must be set before initialize");
    ilm_ = std::move(ilm);
    if (ilm_) pa_ = ilm_->identityParams();
  }

  const IlluminationModel* ilm() const { return ilm_.get(); }
  const Vec& ilmParams() const { return pa_; }

  /// Updates photometric parameters; candidate statistics are invalidated.
  void setIlmParams(const Vec& pa) {
    if (!ilm_) throw std::invalid_argument("no illumination model attached");
    if (pa.size() != ilm_->paramCount())
      throw std::invalid_argument("ilm parameter size mismatch");
    pa_ = pa;
    if (hasCurr_) {
      mapCurrent();
      simCurrent_ = initGradCurrent_ = currGradCurrent_ = false;
    }
  }

  /// df/dp for the template side: [dfdI0 * dI0_dp | dfdIc * dg/dpa].
  RowVec cmptInitJacobian(const Mat& dI0Dp) {
    if (!initGradCurrent_) throw CallOrderError("cmptInitJacobian: init grad stale");
    checkRows(dI0Dp, "cmptInitJacobian");
    RowVec geo = initGrad_ * dI0Dp;
    if (!ilm_) return geo;
    if (!currGradCurrent_)
      throw CallOrderError("cmptInitJacobian: curr grad needed with ilm");
    RowVec out(dI0Dp.cols() + ilm_->paramCount());
    out << geo, currGrad_ * ilm_->dgDpa(rawCurr_, pa_);
    return out;
  }

  /// df/dp for the candidate side: photometric chain applied when an
  /// illumination model is attached.
  RowVec cmptCurrJacobian(const Mat& dItDp) {
    if (!currGradCurrent_) throw CallOrderError("cmptCurrJacobian: curr grad stale");
    checkRows(dItDp, "cmptCurrJacobian");
    if (!ilm_) return currGrad_ * dItDp;
    const Vec gi = ilm_->dgDI(rawCurr_, pa_);
    RowVec out(dItDp.cols() + ilm_->paramCount());
    out << (currGrad_.transpose().cwiseProduct(gi)).transpose() * dItDp,
        currGrad_ * ilm_->dgDpa(rawCurr_, pa_);
    return out;
  }

  /// J_esm: difference between the candidate-side and template-side
  /// Jacobians. With an ILM the photometric block is taken from the
  /// candidate side only (the template has no photometric parameters).
  RowVec cmptDifferenceOfJacobians(const Mat& dI0Dp, const Mat& dItDp) {
    if (dI0Dp.cols() != dItDp.cols())
      throw std::invalid_argument("cmptDifferenceOfJacobians: column mismatch");
    RowVec jc = cmptCurrJacobian(dItDp);
    RowVec ji = cmptInitJacobian(dI0Dp);
    if (!ilm_) return jc - ji;
    const Eigen::Index s = dItDp.cols();
    RowVec out = jc;
    out.head(s) -= ji.head(s);
    return out;
  }

  // ---- Hessians -----------------------------------------------------------
  // First-order overloads omit the pixel-Hessian term; all returned matrices
  // are symmetric.

  Mat cmptSelfHessian(const Mat& dIDp) {
    requireSimilarity("cmptSelfHessian");
    checkRows(dIDp, "cmptSelfHessian");
    return symmetrize(selfHessOp(augment(dIDp)));
  }

  Mat cmptSelfHessian(const Mat& dIDp, const PixHessTensor& d2IDp2) {
    requireSimilarity("cmptSelfHessian");
    checkRows(dIDp, "cmptSelfHessian");
    checkTensor(d2IDp2, dIDp.cols(), "cmptSelfHessian");
    Mat h = selfHessOp(augment(dIDp));
    const RowVec g = selfGrad();
    if (!g.isZero(0.0))
      h += secondOrderTerm(g, dIDp, d2IDp2);
    return symmetrize(std::move(h));
  }

  Mat cmptInitHessian(const Mat& dI0Dp) {
    requireIlmFree("cmptInitHessian");
    if (!initGradCurrent_) throw CallOrderError("cmptInitHessian: init grad stale");
    checkRows(dI0Dp, "cmptInitHessian");
    return symmetrize(initHessOp(dI0Dp));
  }

  Mat cmptInitHessian(const Mat& dI0Dp, const PixHessTensor& d2I0Dp2) {
    requireIlmFree("cmptInitHessian");
    if (!initGradCurrent_) throw CallOrderError("cmptInitHessian: init grad stale");
    checkRows(dI0Dp, "cmptInitHessian");
    checkTensor(d2I0Dp2, dI0Dp.cols(), "cmptInitHessian");
    Mat h = initHessOp(dI0Dp) + contractPixHess(d2I0Dp2, initGrad_);
    return symmetrize(std::move(h));
  }

  Mat cmptCurrHessian(const Mat& dItDp) {
    if (!currGradCurrent_) throw CallOrderError("cmptCurrHessian: curr grad stale");
    checkRows(dItDp, "cmptCurrHessian");
    return symmetrize(currHessOp(augment(dItDp)));
  }

  Mat cmptCurrHessian(const Mat& dItDp, const PixHessTensor& d2ItDp2) {
    if (!currGradCurrent_) throw CallOrderError("cmptCurrHessian: curr grad stale");
    checkRows(dItDp, "cmptCurrHessian");
    checkTensor(d2ItDp2, dItDp.cols(), "cmptCurrHessian");
    Mat h = currHessOp(augment(dItDp)) + secondOrderTerm(currGrad_, dItDp, d2ItDp2);
    return symmetrize(std::move(h));
  }

  Mat cmptSumOfHessians(const Mat& dI0Dp, const Mat& dItDp) {
    return cmptInitHessian(dI0Dp) + cmptCurrHessian(dItDp);
  }

  Mat cmptSumOfHessians(const Mat& dI0Dp, const Mat& dItDp,
                        const PixHessTensor& d2I0Dp2,
                        const PixHessTensor& d2ItDp2) {
    return cmptInitHessian(dI0Dp, d2I0Dp2) + cmptCurrHessian(dItDp, d2ItDp2);
  }

  // ---- distance features -----------------------------------------------------

  virtual Eigen::Index distFeatSize() const { return n_; }

  Vec initializeDistFeat() {
    requireTemplate();
    initFeat_ = distFeature(i0_);
    return initFeat_;
  }

  Vec updateDistFeat() {
    requireTemplate();
    if (!hasCurr_) throw CallOrderError("updateDistFeat before pixel values");
    currFeat_ = distFeature(ic_);
    return currFeat_;
  }

  const Vec& getDistFeat() const { return currFeat_; }
  const Vec& getInitDistFeat() const { return initFeat_; }

  /// Squared Euclidean distance between two features; the argmin over a
  /// sample set matches the argmax of f over the same set.
  virtual double dist(const Vec& f1, const Vec& f2) const {
    if (f1.size() != f2.size())
      throw std::invalid_argument("dist: feature length mismatch");
    return (f1 - f2).squaredNorm();
  }

  // ---- likelihood -------------------------------------------------------------

  void setLikelihoodAlpha(double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("likelihood alpha must be > 0");
    alpha_ = alpha;
  }
  double likelihoodAlpha() const { return alpha_; }

  double getLikelihood() const {
    requireSimilarity("getLikelihood");
    return std::exp(-alpha_ * dissimilarity());
  }

protected:
  // Model statistics for the stored template; called once at initialize.
  virtual void initializeImpl() = 0;
  // Recompute statistics for (i0_, ic_) and return f.
  virtual double similarityImpl() = 0;
  virtual RowVec initGradImpl() = 0;  // df/dI* at the current pair
  virtual RowVec currGradImpl() = 0;  // df/dIc at the current pair
  // Quadratic-form contractions j^T * d2f/dI^2 * j at the current pair.
  virtual Mat initHessOp(const Mat& j) const = 0;
  virtual Mat currHessOp(const Mat& j) const = 0;
  // Same contraction with d2f evaluated at the perfect-alignment pair.
  virtual Mat selfHessOp(const Mat& j) const = 0;
  // df(I,I)/dI at perfect alignment; identically zero for all models here.
  virtual RowVec selfGrad() const { return RowVec::Zero(n_); }
  virtual Vec distFeature(const Patch& patch) const { return patch; }
  // Nonnegative dissimilarity D used by the likelihood exp(-alpha * D).
  virtual double dissimilarity() const = 0;

  static Mat contractPixHess(const PixHessTensor& t, const RowVec& coeff) {
    const auto s = static_cast<Eigen::Index>(
        std::llround(std::sqrt(static_cast<double>(t.rows()))));
    Vec v = t * coeff.transpose();
    return Eigen::Map<const Mat>(v.data(), s, s);
  }

  static Mat symmetrize(Mat m) { return 0.5 * (m + m.transpose()); }

  void requireTemplate() const {
    if (!hasTemplate_) throw CallOrderError("appearance model not initialized");
  }

  void requireSimilarity(const char* where) const {
    if (!simCurrent_)
      throw CallOrderError(std::string(where) + ": updateSimilarity required");
  }

  void requireFrame() const {
    if (!frame_) throw CallOrderError("no current frame set");
  }

  void requireIlmFree(const char* where) const {
    if (ilm_)
      throw std::logic_error(std::string(where) +
                             ": not available with an illumination model");
  }

  void checkRows(const Mat& j, const char* where) const {
    if (j.rows() != n_)
      throw std::invalid_argument(std::string(where) + ": row count mismatch");
  }

  static void checkTensor(const PixHessTensor& t, Eigen::Index s,
                          const char* where) {
    if (t.rows() != s * s)
      throw std::invalid_argument(std::string(where) + ": tensor size mismatch");
  }

  // Candidate-side pixel Jacobian with the photometric chain folded in.
  Mat augment(const Mat& j) const {
    if (!ilm_) return j;
    const Vec gi = ilm_->dgDI(rawCurr_, pa_);
    Mat out(n_, j.cols() + ilm_->paramCount());
    out.leftCols(j.cols()) = gi.asDiagonal() * j;
    out.rightCols(ilm_->paramCount()) = ilm_->dgDpa(rawCurr_, pa_);
    return out;
  }

  // gamma-weighted contraction of d2Ic/dp2 including photometric blocks.
  Mat secondOrderTerm(const RowVec& gamma, const Mat& j,
                      const PixHessTensor& d2) const {
    if (!ilm_) return contractPixHess(d2, gamma);
    const Eigen::Index s = j.cols();
    const Eigen::Index a = ilm_->paramCount();
    Mat out = Mat::Zero(s + a, s + a);
    const Vec gi = ilm_->dgDI(rawCurr_, pa_);
    out.topLeftCorner(s, s) =
        contractPixHess(d2, gamma.cwiseProduct(gi.transpose()));
    const Mat cross =
        j.transpose() * gamma.transpose().asDiagonal() * ilm_->d2gDIdpa(rawCurr_, pa_);
    out.topRightCorner(s, a) = cross;
    out.bottomLeftCorner(a, s) = cross.transpose();
    out.bottomRightCorner(a, a) = ilm_->d2gDpa2Contraction(rawCurr_, pa_, gamma);
    return out;
  }

  void mapCurrent() { ic_ = ilm_ ? ilm_->apply(rawCurr_, pa_) : rawCurr_; }

  Eigen::Index n_ = 0;
  Patch i0_;       // template patch, frozen after initialize
  Patch rawCurr_;  // candidate patch as sampled
  Patch ic_;       // candidate patch after the photometric map
  double f_ = 0.0;
  RowVec initGrad_, currGrad_;
  Vec initFeat_, currFeat_;

  const Image* frame_ = nullptr;
  PixGrad initGradPix_, currGradPix_;
  PixHess initHessPix_, currHessPix_;
  double gradStep_ = 0.5;

  std::shared_ptr<IlluminationModel> ilm_;
  Vec pa_;

  double alpha_ = 5.0;

  bool hasTemplate_ = false;
  bool hasCurr_ = false;
  bool simCurrent_ = false;
  bool initGradCurrent_ = false;
  bool currGradCurrent_ = false;
};

}  // namespace warptrack
