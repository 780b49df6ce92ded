#pragma once

// Nearest-neighbor search method: a dataset of appearance features generated
// by inverse perturbations of the initial state, indexed for fast lookup.
// Each update applies the stored compositional update of the best match.

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "warptrack/sm/tracker.hpp"

namespace warptrack {

/// Exact nearest-neighbor index over row vectors (squared Euclidean metric).
class NnIndex {
public:
  virtual ~NnIndex() = default;
  virtual void build(const Mat& data) = 0;
  virtual Eigen::Index nearest(const Vec& query) const = 0;
};

class BruteForceIndex : public NnIndex {
public:
  void build(const Mat& data) override { data_ = data; }

  Eigen::Index nearest(const Vec& query) const override {
    Eigen::Index best = 0;
    (data_.rowwise() - query.transpose()).rowwise().squaredNorm().minCoeff(&best);
    return best;
  }

private:
  Mat data_;
};

/// Exact kd-tree with median splits on the widest dimension and
/// bounds-pruned backtracking.
class KdTreeIndex : public NnIndex {
public:
  void build(const Mat& data) override {
    data_ = data;
    order_.resize(static_cast<size_t>(data.rows()));
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.clear();
    nodes_.reserve(static_cast<size_t>(2 * data.rows() / kLeafSize + 2));
    root_ = buildNode(0, static_cast<Eigen::Index>(order_.size()));
  }

  Eigen::Index nearest(const Vec& query) const override {
    Eigen::Index best = -1;
    double bestDist = std::numeric_limits<double>::infinity();
    search(root_, query, best, bestDist);
    return best;
  }

private:
  static constexpr Eigen::Index kLeafSize = 8;

  struct Node {
    int splitDim = -1;     // -1 for leaves
    double splitVal = 0.0;
    int left = -1, right = -1;
    Eigen::Index begin = 0, end = 0;  // leaf range in order_
  };

  int buildNode(Eigen::Index begin, Eigen::Index end) {
    Node node;
    node.begin = begin;
    node.end = end;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    // widest dimension across the points in range
    int dim = 0;
    double widest = -1.0;
    for (Eigen::Index d = 0; d < data_.cols(); ++d) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (Eigen::Index i = begin; i < end; ++i) {
        const double v = data_(order_[static_cast<size_t>(i)], d);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > widest) {
        widest = hi - lo;
        dim = static_cast<int>(d);
      }
    }
    if (widest <= 0.0) return id;  // all points identical: keep as leaf

    const Eigen::Index mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end,
                     [&](Eigen::Index a, Eigen::Index b) {
                       return data_(a, dim) < data_(b, dim);
                     });
    nodes_[static_cast<size_t>(id)].splitDim = dim;
    nodes_[static_cast<size_t>(id)].splitVal =
        data_(order_[static_cast<size_t>(mid)], dim);
    const int left = buildNode(begin, mid);
    const int right = buildNode(mid, end);
    nodes_[static_cast<size_t>(id)].left = left;
    nodes_[static_cast<size_t>(id)].right = right;
    return id;
  }

  void search(int id, const Vec& q, Eigen::Index& best, double& bestDist) const {
    const Node& node = nodes_[static_cast<size_t>(id)];
    if (node.splitDim < 0) {
      for (Eigen::Index i = node.begin; i < node.end; ++i) {
        const Eigen::Index row = order_[static_cast<size_t>(i)];
        const double d = (data_.row(row).transpose() - q).squaredNorm();
        if (d < bestDist) {
          bestDist = d;
          best = row;
        }
      }
      return;
    }
    const double diff = q[node.splitDim] - node.splitVal;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search(near, q, best, bestDist);
    if (diff * diff < bestDist) search(far, q, best, bestDist);
  }

  Mat data_;
  std::vector<Eigen::Index> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

class NnTracker : public TrackerBase {
public:
  NnTracker(std::unique_ptr<AppearanceModel> am,
            std::unique_ptr<StateSpaceModel> ssm, TrackerConfig cfg)
      : TrackerBase(std::move(am), std::move(ssm), cfg) {}

  std::string name() const override { return "nn"; }

  Corners update(const Image& frame) override {
    requireInit();
    status_ = {};
    am_->setCurrentFrame(frame);
    am_->updatePixVals(ssm_->getPts());
    am_->updateDistFeat();
    const Eigen::Index id = index_->nearest(am_->getDistFeat());
    lastMatch_ = id;
    ssm_->compositionalUpdate(updates_.row(id).transpose());
    status_.converged = true;
    return ssm_->getCorners();
  }

  const Mat& sampleDataset() const { return dataset_; }
  const Mat& sampleUpdates() const { return updates_; }
  Eigen::Index lastMatchIndex() const { return lastMatch_; }

protected:
  void initializeImpl(const Image&) override {
    const Vec sigma = cfg_.stateSigma.size() > 0
                          ? cfg_.stateSigma
                          : ssm_->estimateStateSigma(cfg_.cornerSigmaPx);
    ssm_->initializeSampler({sigma, 0.0, cfg_.seed});
    am_->initializeDistFeat();

    const int n = cfg_.nnSamples;
    updates_.resize(n, ssm_->stateSize());
    dataset_.resize(n, am_->distFeatSize());
    const Vec p0 = ssm_->getState();
    for (int i = 0; i < n; ++i) {
      const Vec delta = ssm_->generatePerturbation();
      updates_.row(i) = delta.transpose();
      ssm_->compositionalUpdate(ssm_->invertState(delta));
      am_->updatePixVals(ssm_->getPts());
      am_->updateDistFeat();
      dataset_.row(i) = am_->getDistFeat().transpose();
      ssm_->setState(p0);
    }
    index_ = cfg_.nnIndex == NnIndexKind::BruteForce
                 ? std::unique_ptr<NnIndex>(std::make_unique<BruteForceIndex>())
                 : std::unique_ptr<NnIndex>(std::make_unique<KdTreeIndex>());
    index_->build(dataset_);
  }

private:
  Mat updates_;   // one stored compositional update per sample
  Mat dataset_;   // one distance feature per sample
  std::unique_ptr<NnIndex> index_;
  Eigen::Index lastMatch_ = -1;
};

}  // namespace warptrack
