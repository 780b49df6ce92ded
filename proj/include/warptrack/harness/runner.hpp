#pragma once

// The tracking and register-to-reference loops. Per-frame timing covers the
// tracker update call only, excluding I/O and preprocessing.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "warptrack/harness/evaluate.hpp"
#include "warptrack/harness/preprocess.hpp"
#include "warptrack/harness/sequence.hpp"
#include "warptrack/io/corners_io.hpp"
#include "warptrack/sm/factory.hpp"

namespace warptrack {

struct RunConfig {
  TrackerSpec tracker;
  PreprocessConfig preprocess;
  std::optional<Corners> initCorners;  // defaults to ground-truth line 1
  std::string outDir;                  // empty: no files written
};

struct RunResult {
  std::vector<Corners> corners;
  std::vector<long> updateMicros;
  std::vector<FrameStatus> statuses;
};

namespace detail {

inline long timedUpdate(TrackerBase& tracker, const Image& frame,
                        Corners& out) {
  const auto t0 = std::chrono::steady_clock::now();
  out = tracker.update(frame);
  const auto t1 = std::chrono::steady_clock::now();
  return static_cast<long>(
      std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count());
}

}  // namespace detail

inline void writeRunOutputs(const std::string& outDir, const RunResult& result,
                            const EvalSummary* summary = nullptr) {
  namespace fs = std::filesystem;
  fs::create_directories(outDir);
  writeCornersFile((fs::path(outDir) / "corners.txt").string(), result.corners);
  std::ofstream out((fs::path(outDir) / "summary.txt").string());
  out << "frames " << result.corners.size() << "\n";
  double tsum = 0.0;
  for (long t : result.updateMicros) tsum += static_cast<double>(t);
  out << "mean_update_us "
      << (result.updateMicros.empty() ? 0.0 : tsum / result.updateMicros.size())
      << "\n";
  int failures = 0;
  for (const auto& st : result.statuses) failures += st.frameFailure ? 1 : 0;
  out << "frame_failures " << failures << "\n";
  if (summary) {
    out << "mean_mcd " << summary->meanMcd << "\n";
    out << "median_mcd " << summary->medianMcd << "\n";
    for (size_t i = 0; i < kSuccessThresholds.size(); ++i)
      out << "success_at_" << kSuccessThresholds[i] << "px "
          << summary->successRate[i] << "\n";
  }
}

/// Track an object through a sequence: preprocess, update, record per frame.
/// Tracker failures are recorded and tracking continues from the last valid
/// state.
inline RunResult runTracking(SequenceSource& seq, const RunConfig& cfg) {
  auto tracker = makeTracker(cfg.tracker);
  RunResult result;
  result.corners.reserve(seq.frameCount());

  Image frame = preprocess(seq.loadFrame(0), cfg.preprocess);
  Corners init;
  if (cfg.initCorners) {
    init = *cfg.initCorners;
  } else {
    throw std::invalid_argument("runTracking: no initial corners provided");
  }
  tracker->initialize(frame, init);
  result.corners.push_back(tracker->getRegion());
  result.updateMicros.push_back(0);
  result.statuses.push_back(FrameStatus{true, false, false, false, 0});

  for (size_t t = 1; t < seq.frameCount(); ++t) {
    frame = preprocess(seq.loadFrame(t), cfg.preprocess);
    Corners c;
    const long micros = detail::timedUpdate(*tracker, frame, c);
    result.corners.push_back(c);
    result.updateMicros.push_back(micros);
    result.statuses.push_back(tracker->lastStatus());
  }
  if (!cfg.outDir.empty()) writeRunOutputs(cfg.outDir, result);
  return result;
}

/// Register-to-reference mode: every query frame becomes the template (full
/// extent), the region is re-seated at the previous reference location, and
/// one update against the reference image yields the new location.
inline RunResult runLocalization(SequenceSource& querySeq,
                                 const Image& reference,
                                 const Corners& initRegion,
                                 const RunConfig& cfg) {
  const Image ref = preprocess(reference, cfg.preprocess);
  RunResult result;
  Corners region = initRegion;
  auto tracker = makeTracker(cfg.tracker);

  for (size_t t = 0; t < querySeq.frameCount(); ++t) {
    const Image query = preprocess(querySeq.loadFrame(t), cfg.preprocess);
    Corners fullExtent;
    fullExtent << 0, query.width - 1, query.width - 1, 0,
                  0, 0, query.height - 1, query.height - 1;
    tracker->initialize(query, fullExtent);
    tracker->setRegion(region);
    Corners c;
    const long micros = detail::timedUpdate(*tracker, ref, c);
    region = c;
    result.corners.push_back(c);
    result.updateMicros.push_back(micros);
    result.statuses.push_back(tracker->lastStatus());
  }
  if (!cfg.outDir.empty()) writeRunOutputs(cfg.outDir, result);
  return result;
}

}  // namespace warptrack
