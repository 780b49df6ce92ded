#pragma once

// Uniform tracker interface. Search methods are written purely against the
// appearance and state-space contracts: the only image access is handing the
// frame to the appearance model, and all warp math goes through the SSM.

#include <memory>
#include <stdexcept>
#include <utility>

#include "warptrack/am/appearance_model.hpp"
#include "warptrack/common.hpp"
#include "warptrack/image.hpp"
#include "warptrack/ssm/state_space_model.hpp"

namespace warptrack {

enum class HessianOrder { First, Second };
enum class NnIndexKind { BruteForce, KdTree };

struct TrackerConfig {
  int maxIterations = 30;
  double epsilon = 0.01;  // corner-change convergence threshold, px
  HessianOrder hessianOrder = HessianOrder::First;
  int resX = 50;
  int resY = 50;

  int nnSamples = 1000;
  NnIndexKind nnIndex = NnIndexKind::KdTree;

  int pfParticles = 200;
  double pfResampleThreshold = 0.5;  // resample when ESS < threshold * n

  double cornerSigmaPx = 5.0;  // sampler heuristic input
  Vec stateSigma;              // non-empty: overrides the heuristic
  std::uint64_t seed = 0;

  void validate() const {
    if (maxIterations < 1 || nnSamples < 1 || pfParticles < 1 ||
        resX < 2 || resY < 2)
      throw std::invalid_argument("tracker config: counts must be positive");
    if (epsilon <= 0.0)
      throw std::invalid_argument("tracker config: epsilon must be > 0");
    if (pfResampleThreshold <= 0.0 || pfResampleThreshold > 1.0)
      throw std::invalid_argument("tracker config: bad resample threshold");
    if (cornerSigmaPx <= 0.0)
      throw std::invalid_argument("tracker config: corner sigma must be > 0");
  }
};

struct FrameStatus {
  bool converged = false;
  bool frameFailure = false;   // singular warp; last valid state kept
  bool pseudoInverse = false;  // rank-deficient Hessian solved by pinv
  bool weightsReset = false;   // PF likelihood underflow
  int iterations = 0;
};

class TrackerBase {
public:
  TrackerBase(std::unique_ptr<AppearanceModel> am,
              std::unique_ptr<StateSpaceModel> ssm, TrackerConfig cfg)
      : am_(std::move(am)), ssm_(std::move(ssm)), cfg_(cfg) {
    if (!am_ || !ssm_) throw std::invalid_argument("tracker: null sub-module");
    cfg_.validate();
  }
  virtual ~TrackerBase() = default;

  virtual std::string name() const = 0;

  virtual void initialize(const Image& frame, const Corners& corners) {
    checkCornersInFrame(frame, corners);
    ssm_->initialize(corners, cfg_.resX, cfg_.resY);
    am_->setCurrentFrame(frame);
    am_->initializePixVals(ssm_->getPts());
    initializeImpl(frame);
    initialized_ = true;
  }

  virtual Corners update(const Image& frame) = 0;

  Corners getRegion() const {
    requireInit();
    return ssm_->getCorners();
  }

  /// Re-seats the state without touching the template.
  void setRegion(const Corners& corners) {
    requireInit();
    ssm_->setCorners(corners);
  }

  const FrameStatus& lastStatus() const { return status_; }
  AppearanceModel& am() { return *am_; }
  StateSpaceModel& ssm() { return *ssm_; }
  const TrackerConfig& config() const { return cfg_; }

protected:
  virtual void initializeImpl(const Image& frame) = 0;

  void requireInit() const {
    if (!initialized_) throw CallOrderError("tracker not initialized");
  }

  static void checkCornersInFrame(const Image& frame, const Corners& c) {
    if (!frame.valid()) throw std::invalid_argument("tracker: invalid frame");
    for (int j = 0; j < 4; ++j) {
      if (c(0, j) < 0.0 || c(0, j) > frame.width - 1 || c(1, j) < 0.0 ||
          c(1, j) > frame.height - 1)
        throw std::invalid_argument("tracker: corners outside image");
    }
  }

  double maxCornerChange(const Corners& before, const Corners& after) const {
    return (after - before).colwise().norm().maxCoeff();
  }

  std::unique_ptr<AppearanceModel> am_;
  std::unique_ptr<StateSpaceModel> ssm_;
  TrackerConfig cfg_;
  FrameStatus status_;
  bool initialized_ = false;
};

}  // namespace warptrack
