#pragma once

// SSD-family similarity measures: f = -1/2 ||et - e0||^2 over an effective
// patch pair. SCV and RSCV differ from plain SSD only in replacing one side
// by its conditional-expectation mapping under a joint intensity histogram;
// since that mapping is an orthogonal projector onto bin-wise constant
// vectors, the SSD-form gradients on the effective pair are the exact ones
// on the side that varies continuously.

#include <algorithm>
#include <cmath>
#include <vector>

#include "warptrack/am/appearance_model.hpp"

namespace warptrack {

class SsdBase : public AppearanceModel {
public:
  double dissimilarityOf(double f) const {
    return -2.0 * f / static_cast<double>(n_);
  }

protected:
  virtual const Patch& effInit() const { return i0_; }
  virtual const Patch& effCurr() const { return ic_; }

  double ssdValue() const {
    return -0.5 * (effCurr() - effInit()).squaredNorm();
  }

  RowVec initGradImpl() override { return (effCurr() - effInit()).transpose(); }
  RowVec currGradImpl() override { return (effInit() - effCurr()).transpose(); }

  Mat initHessOp(const Mat& j) const override { return -(j.transpose() * j); }
  Mat currHessOp(const Mat& j) const override { return -(j.transpose() * j); }
  Mat selfHessOp(const Mat& j) const override { return -(j.transpose() * j); }

  double dissimilarity() const override { return dissimilarityOf(f_); }
};

class Ssd : public SsdBase {
public:
  std::string name() const override { return "ssd"; }

protected:
  void initializeImpl() override {}
  double similarityImpl() override { return ssdValue(); }
};

namespace detail {

inline void requireNonConstant(const Patch& p, const char* who) {
  const double sigma = std::sqrt((p.array() - p.mean()).square().mean());
  if (sigma < 1e-8)
    throw DegeneratePatchError(std::string(who) + ": zero-variance patch");
}

/// Uniform intensity binning over [0, range).
class IntensityBins {
public:
  IntensityBins(int bins, double range) : bins_(bins), range_(range) {
    if (bins < 1) throw std::invalid_argument("bins must be >= 1");
  }

  int binOf(double v) const {
    const int b = static_cast<int>(v * bins_ / range_);
    return std::clamp(b, 0, bins_ - 1);
  }

  double center(int bin) const { return (bin + 0.5) * range_ / bins_; }
  int count() const { return bins_; }

  std::vector<int> assign(const Patch& p) const {
    std::vector<int> ids(static_cast<size_t>(p.size()));
    for (Eigen::Index k = 0; k < p.size(); ++k)
      ids[static_cast<size_t>(k)] = binOf(p[k]);
    return ids;
  }

private:
  int bins_;
  double range_;
};

/// Bin-wise means of `values` spread back to per-pixel entries.
inline Patch groupMeans(const std::vector<int>& ids, const Patch& values,
                        int bins, Vec* tableOut = nullptr,
                        const IntensityBins* fallback = nullptr) {
  Vec sum = Vec::Zero(bins);
  Vec cnt = Vec::Zero(bins);
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    sum[ids[static_cast<size_t>(k)]] += values[k];
    cnt[ids[static_cast<size_t>(k)]] += 1.0;
  }
  Vec table(bins);
  for (int j = 0; j < bins; ++j) {
    if (cnt[j] > 0.0)
      table[j] = sum[j] / cnt[j];
    else
      table[j] = fallback ? fallback->center(j) : 0.0;  // identity fallback
  }
  Patch out(values.size());
  for (Eigen::Index k = 0; k < values.size(); ++k)
    out[k] = table[ids[static_cast<size_t>(k)]];
  if (tableOut) *tableOut = table;
  return out;
}

/// Subtracts bin-wise column means from j: ((I - Pi) j).
inline Mat groupCenter(const std::vector<int>& ids, const Mat& j, int bins) {
  Mat sums = Mat::Zero(bins, j.cols());
  Vec cnt = Vec::Zero(bins);
  for (Eigen::Index k = 0; k < j.rows(); ++k) {
    sums.row(ids[static_cast<size_t>(k)]) += j.row(k);
    cnt[ids[static_cast<size_t>(k)]] += 1.0;
  }
  for (int b = 0; b < bins; ++b)
    if (cnt[b] > 0.0) sums.row(b) /= cnt[b];
  Mat out(j.rows(), j.cols());
  for (Eigen::Index k = 0; k < j.rows(); ++k)
    out.row(k) = j.row(k) - sums.row(ids[static_cast<size_t>(k)]);
  return out;
}

}  // namespace detail

/// Sum of conditional variance: the template is replaced by the expectation
/// of the candidate intensity conditioned on the template's intensity bin.
class Scv : public SsdBase {
public:
  explicit Scv(int bins = 64, double range = 256.0) : bins_(bins, range) {}

  std::string name() const override { return "scv"; }

  /// Bin -> expected candidate intensity (empty bins map to their center).
  Vec intensityMapping() const { return mapTable_; }

protected:
  void initializeImpl() override {
    detail::requireNonConstant(i0_, "scv");
    groupIds_ = bins_.assign(i0_);
    mapped0_ = i0_;
    mapTable_.resize(0);
  }

  double similarityImpl() override {
    mapped0_ = detail::groupMeans(groupIds_, ic_, bins_.count(), &mapTable_, &bins_);
    return ssdValue();
  }

  const Patch& effInit() const override { return mapped0_; }

  // d2f/dIc^2 = -(I - Pi0): exact, the bin partition is fixed by the template.
  Mat currHessOp(const Mat& j) const override {
    const Mat jc = detail::groupCenter(groupIds_, j, bins_.count());
    return -(jc.transpose() * jc);
  }

private:
  detail::IntensityBins bins_{64, 256.0};
  std::vector<int> groupIds_;
  Patch mapped0_;
  Vec mapTable_;
};

/// Reversed SCV: the candidate is replaced by the expectation of the template
/// intensity conditioned on the candidate's intensity bin.
class Rscv : public SsdBase {
public:
  explicit Rscv(int bins = 64, double range = 256.0) : bins_(bins, range) {}

  std::string name() const override { return "rscv"; }

  Vec intensityMapping() const { return mapTable_; }

protected:
  void initializeImpl() override {
    detail::requireNonConstant(i0_, "rscv");
    mappedT_ = i0_;
    mapTable_.resize(0);
  }

  double similarityImpl() override {
    groupIds_ = bins_.assign(ic_);
    mappedT_ = detail::groupMeans(groupIds_, i0_, bins_.count(), &mapTable_, &bins_);
    return ssdValue();
  }

  const Patch& effCurr() const override { return mappedT_; }

  // d2f/dI0^2 = -(I - Pi_t): exact, bins depend on the candidate only.
  Mat initHessOp(const Mat& j) const override {
    const Mat jc = detail::groupCenter(groupIds_, j, bins_.count());
    return -(jc.transpose() * jc);
  }

private:
  detail::IntensityBins bins_{64, 256.0};
  std::vector<int> groupIds_;
  Patch mappedT_;
  Vec mapTable_;
};

}  // namespace warptrack
