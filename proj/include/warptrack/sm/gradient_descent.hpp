#pragma once

// Gradient-descent search: the four Lucas-Kanade formulations plus ESM,
// distinguished by which image supplies gradients and how the incremental
// update is applied. Each iteration solves  dp = -H^-1 J^T  with the
// variant's Jacobian and Self-Hessian estimates.

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <memory>
#include <string>
#include <utility>

#include "warptrack/sm/tracker.hpp"

namespace warptrack {

enum class GdVariant { Iclk, Fclk, Falk, Ialk, Esm };

inline std::string gdVariantName(GdVariant v) {
  switch (v) {
    case GdVariant::Iclk: return "iclk";
    case GdVariant::Fclk: return "fclk";
    case GdVariant::Falk: return "falk";
    case GdVariant::Ialk: return "ialk";
    case GdVariant::Esm: return "esm";
  }
  return "?";
}

class GdTracker : public TrackerBase {
public:
  GdTracker(GdVariant variant, std::unique_ptr<AppearanceModel> am,
            std::unique_ptr<StateSpaceModel> ssm, TrackerConfig cfg)
      : TrackerBase(std::move(am), std::move(ssm), cfg), variant_(variant) {}

  std::string name() const override { return gdVariantName(variant_); }
  GdVariant variant() const { return variant_; }

  Corners update(const Image& frame) override {
    requireInit();
    am_->setCurrentFrame(frame);
    status_ = {};
    const Vec stateSnapshot = ssm_->getState();
    const Vec paSnapshot = am_->hasIlm() ? am_->ilmParams() : Vec();

    for (int iter = 0; iter < cfg_.maxIterations; ++iter) {
      status_.iterations = iter + 1;
      try {
        am_->updatePixVals(ssm_->getPts());
        am_->updateSimilarity();

        RowVec jac;
        Mat hess;
        computeStep(jac, hess);

        const Vec delta = solveNewton(hess, jac);
        const int s = ssm_->stateSize();
        const Vec dps = delta.head(s);

        const Corners before = ssm_->getCorners();
        switch (variant_) {
          case GdVariant::Iclk:
            ssm_->compositionalUpdate(ssm_->invertState(dps));
            break;
          case GdVariant::Fclk:
          case GdVariant::Esm:
            ssm_->compositionalUpdate(dps);
            break;
          case GdVariant::Falk:
          case GdVariant::Ialk:
            ssm_->additiveUpdate(dps);
            break;
        }
        if (am_->hasIlm())
          am_->setIlmParams(am_->ilmParams() + delta.tail(am_->ilmParamCount()));

        if (maxCornerChange(before, ssm_->getCorners()) < cfg_.epsilon) {
          status_.converged = true;
          break;
        }
      } catch (const SingularWarpError&) {
        ssm_->setState(stateSnapshot);
        if (paSnapshot.size() > 0) am_->setIlmParams(paSnapshot);
        status_.frameFailure = true;
        break;
      }
    }
    return ssm_->getCorners();
  }

protected:
  void initializeImpl(const Image&) override {
    const bool second = cfg_.hessianOrder == HessianOrder::Second;
    switch (variant_) {
      case GdVariant::Iclk:
      case GdVariant::Esm: {
        am_->initializePixGrad(ssm_->getPts());
        initPixJac_ = ssm_->cmptWarpedPixJacobian(am_->getInitPixGrad());
        if (second) {
          am_->initializePixHess(ssm_->getPts());
          initPixHess_ = ssm_->cmptWarpedPixHessian(am_->getInitPixGrad(),
                                                    am_->getInitPixHess());
          initHessian_ = am_->cmptSelfHessian(initPixJac_, initPixHess_);
        } else {
          initHessian_ = am_->cmptSelfHessian(initPixJac_);
        }
        break;
      }
      case GdVariant::Ialk: {
        am_->initializePixGrad(ssm_->getPts());
        if (second) am_->initializePixHess(ssm_->getPts());
        break;
      }
      case GdVariant::Fclk:
      case GdVariant::Falk:
        break;
    }
  }

private:
  void computeStep(RowVec& jac, Mat& hess) {
    const bool second = cfg_.hessianOrder == HessianOrder::Second;
    const PointGrid& pts = ssm_->getPts();
    switch (variant_) {
      case GdVariant::Iclk: {
        am_->updateInitGrad();
        if (am_->hasIlm()) am_->updateCurrGrad();
        jac = am_->cmptInitJacobian(initPixJac_);
        // the precomputed Hessian goes stale when photometric params move
        if (am_->hasIlm())
          hess = second ? am_->cmptSelfHessian(initPixJac_, initPixHess_)
                        : am_->cmptSelfHessian(initPixJac_);
        else
          hess = initHessian_;
        break;
      }
      case GdVariant::Fclk: {
        am_->updateCurrGrad();
        am_->updatePixGrad(pts);
        const Mat pixJac = ssm_->cmptWarpedPixJacobian(am_->getCurrPixGrad());
        jac = am_->cmptCurrJacobian(pixJac);
        if (second) {
          am_->updatePixHess(pts);
          const PixHessTensor ph = ssm_->cmptWarpedPixHessian(
              am_->getCurrPixGrad(), am_->getCurrPixHess());
          hess = am_->cmptSelfHessian(pixJac, ph);
        } else {
          hess = am_->cmptSelfHessian(pixJac);
        }
        break;
      }
      case GdVariant::Falk: {
        am_->updateCurrGrad();
        am_->updatePixGrad(pts);
        const Mat pixJac = ssm_->cmptPixJacobian(am_->getCurrPixGrad());
        jac = am_->cmptCurrJacobian(pixJac);
        if (second) {
          am_->updatePixHess(pts);
          const PixHessTensor ph =
              ssm_->cmptPixHessian(am_->getCurrPixGrad(), am_->getCurrPixHess());
          hess = am_->cmptSelfHessian(pixJac, ph);
        } else {
          hess = am_->cmptSelfHessian(pixJac);
        }
        break;
      }
      case GdVariant::Ialk: {
        am_->updateCurrGrad();
        const Mat pixJac = ssm_->cmptApproxPixJacobian(am_->getInitPixGrad());
        jac = am_->cmptCurrJacobian(pixJac);
        if (second) {
          const PixHessTensor ph = ssm_->cmptApproxPixHessian(
              am_->getInitPixGrad(), am_->getInitPixHess());
          hess = am_->cmptSelfHessian(pixJac, ph);
        } else {
          hess = am_->cmptSelfHessian(pixJac);
        }
        break;
      }
      case GdVariant::Esm: {
        am_->updateCurrGrad();
        am_->updateInitGrad();
        am_->updatePixGrad(pts);
        const Mat pixJac = ssm_->cmptWarpedPixJacobian(am_->getCurrPixGrad());
        jac = am_->cmptDifferenceOfJacobians(initPixJac_, pixJac);
        Mat currHess;
        if (second) {
          am_->updatePixHess(pts);
          const PixHessTensor ph = ssm_->cmptWarpedPixHessian(
              am_->getCurrPixGrad(), am_->getCurrPixHess());
          currHess = am_->cmptSelfHessian(pixJac, ph);
        } else {
          currHess = am_->cmptSelfHessian(pixJac);
        }
        const Mat initHess =
            am_->hasIlm()
                ? (second ? am_->cmptSelfHessian(initPixJac_, initPixHess_)
                          : am_->cmptSelfHessian(initPixJac_))
                : initHessian_;
        hess = initHess + currHess;
        break;
      }
    }
  }

  // dp = -H^-1 J^T; a rank-deficient Hessian falls back to the minimum-norm
  // pseudo-inverse solution (flat directions get no update) and is flagged.
  Vec solveNewton(const Mat& h, const RowVec& j) {
    const auto cod = h.completeOrthogonalDecomposition();
    if (cod.rank() < h.rows()) status_.pseudoInverse = true;
    return cod.solve(Vec(-j.transpose()));
  }

  GdVariant variant_;
  Mat initPixJac_;          // iclk/esm: template-side pixel Jacobian
  PixHessTensor initPixHess_;
  Mat initHessian_;         // iclk/esm: template-side Self Hessian
};

}  // namespace warptrack
