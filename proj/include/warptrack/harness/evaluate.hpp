#pragma once

// Ground-truth scoring: per-frame Mean Corner Distance and summary metrics.

#include <algorithm>
#include <array>
#include <stdexcept>
#include <vector>

#include "warptrack/common.hpp"

namespace warptrack {

inline double meanCornerDistance(const Corners& a, const Corners& b) {
  return (a - b).colwise().norm().mean();
}

struct EvalSummary {
  size_t frames = 0;
  double meanMcd = 0.0;
  double medianMcd = 0.0;
  std::array<double, 5> successRate{};  // at 1, 2, 5, 10, 20 px
  double meanUpdateMicros = 0.0;
  std::vector<double> perFrameMcd;
};

inline constexpr std::array<double, 5> kSuccessThresholds{1, 2, 5, 10, 20};

inline EvalSummary evaluate(const std::vector<Corners>& result,
                            const std::vector<Corners>& truth,
                            const std::vector<long>& updateMicros = {}) {
  const size_t n = std::min(result.size(), truth.size());
  if (n == 0) throw std::invalid_argument("evaluate: no overlapping frames");

  EvalSummary s;
  s.frames = n;
  s.perFrameMcd.resize(n);
  for (size_t i = 0; i < n; ++i)
    s.perFrameMcd[i] = meanCornerDistance(result[i], truth[i]);

  std::vector<double> sorted = s.perFrameMcd;
  std::sort(sorted.begin(), sorted.end());
  s.medianMcd = sorted[n / 2];
  double sum = 0.0;
  for (double v : s.perFrameMcd) sum += v;
  s.meanMcd = sum / static_cast<double>(n);

  for (size_t t = 0; t < kSuccessThresholds.size(); ++t) {
    size_t ok = 0;
    for (double v : s.perFrameMcd)
      if (v <= kSuccessThresholds[t]) ++ok;
    s.successRate[t] = static_cast<double>(ok) / static_cast<double>(n);
  }

  if (!updateMicros.empty()) {
    double tsum = 0.0;
    size_t cnt = std::min(updateMicros.size(), n);
    for (size_t i = 0; i < cnt; ++i) tsum += static_cast<double>(updateMicros[i]);
    s.meanUpdateMicros = cnt ? tsum / static_cast<double>(cnt) : 0.0;
  }
  return s;
}

}  // namespace warptrack
