#include <algorithm>
#include <cmath>

#include "auditod/detectors.hpp"
#include "auditod/error.hpp"

namespace auditod {

namespace {
constexpr double kHeightFloor = 1e-6;
}

ScoreVector score_hbos(const FeatureFrame& frame, int n_bins) {
  if (n_bins < 1) throw Error(ErrorCode::InvalidConfig, "HBOS n_histograms must be >= 1");
  const std::size_t n = frame.rows();
  const auto& x = frame.values();
  const auto bins = static_cast<std::size_t>(n_bins);

  std::vector<double> scores(n, 0.0);
  std::vector<std::size_t> bin_of(n);
  std::vector<double> counts(bins);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double lo = x.col(c).minCoeff();
    const double hi = x.col(c).maxCoeff();
    if (!(hi > lo)) continue;  // one effective bin, height 1, log term 0
    std::fill(counts.begin(), counts.end(), 0.0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t r = 0; r < n; ++r) {
      auto b = static_cast<std::size_t>((x(r, c) - lo) / width);
      b = std::min(b, bins - 1);
      bin_of[r] = b;
      counts[b] += 1.0;
    }
    const double tallest = *std::max_element(counts.begin(), counts.end());
    for (std::size_t r = 0; r < n; ++r) {
      const double height = std::max(counts[bin_of[r]] / tallest, kHeightFloor);
      scores[r] += std::log10(1.0 / height);
    }
  }
  return {"HBOS", frame.ids(), std::move(scores), false};
}

}  // namespace auditod
