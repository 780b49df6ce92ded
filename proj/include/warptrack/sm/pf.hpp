#pragma once

// Particle-filter search: particles propagate by a compositional random
// walk, are weighted by the appearance likelihood, and are systematically
// resampled when the effective sample size drops below the threshold.

#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "warptrack/sm/tracker.hpp"

namespace warptrack {

class PfTracker : public TrackerBase {
public:
  PfTracker(std::unique_ptr<AppearanceModel> am,
            std::unique_ptr<StateSpaceModel> ssm, TrackerConfig cfg)
      : TrackerBase(std::move(am), std::move(ssm), cfg) {}

  std::string name() const override { return "pf"; }

  Corners update(const Image& frame) override {
    requireInit();
    status_ = {};
    am_->setCurrentFrame(frame);
    const int n = cfg_.pfParticles;

    for (int i = 0; i < n; ++i) {
      try {
        states_[static_cast<size_t>(i)] =
            ssm_->compositionalRandomWalk(states_[static_cast<size_t>(i)]);
      } catch (const SingularWarpError&) {
        // keep the particle where it was
      }
      double likelihood = 0.0;
      try {
        ssm_->setState(states_[static_cast<size_t>(i)]);
        am_->updatePixVals(ssm_->getPts());
        am_->updateSimilarity();
        likelihood = am_->getLikelihood();
      } catch (const std::runtime_error&) {
        likelihood = 0.0;  // singular warp or degenerate patch
      }
      weights_[i] *= likelihood;
    }

    const double total = weights_.sum();
    if (total <= 0.0 || !std::isfinite(total)) {
      weights_.setConstant(1.0 / n);
      status_.weightsReset = true;
    } else {
      weights_ /= total;
    }

    const double ess = 1.0 / weights_.squaredNorm();
    if (ess < cfg_.pfResampleThreshold * n) resample();

    const Vec mean = ssm_->estimateMeanOfSamples(states_, weights_);
    ssm_->setState(mean);
    status_.converged = true;
    return ssm_->getCorners();
  }

  const Vec& weights() const { return weights_; }
  const std::vector<Vec>& particles() const { return states_; }

protected:
  void initializeImpl(const Image&) override {
    const Vec sigma = cfg_.stateSigma.size() > 0
                          ? cfg_.stateSigma
                          : ssm_->estimateStateSigma(cfg_.cornerSigmaPx);
    ssm_->initializeSampler({sigma, 0.0, cfg_.seed});
    states_.assign(static_cast<size_t>(cfg_.pfParticles), ssm_->getState());
    weights_ = Vec::Constant(cfg_.pfParticles, 1.0 / cfg_.pfParticles);
    resampleRng_.seed(cfg_.seed ^ 0x9e3779b97f4a7c15ULL);
  }

private:
  void resample() {
    const int n = cfg_.pfParticles;
    std::uniform_real_distribution<double> uni(0.0, 1.0 / n);
    const double u0 = uni(resampleRng_);
    std::vector<Vec> next;
    next.reserve(static_cast<size_t>(n));
    double cum = weights_[0];
    int j = 0;
    for (int k = 0; k < n; ++k) {
      const double u = u0 + static_cast<double>(k) / n;
      while (cum < u && j + 1 < n) cum += weights_[++j];
      next.push_back(states_[static_cast<size_t>(j)]);
    }
    states_ = std::move(next);
    weights_.setConstant(1.0 / n);
  }

  std::vector<Vec> states_;
  Vec weights_;
  std::mt19937_64 resampleRng_;
};

}  // namespace warptrack
