#include <numeric>

#include "auditod/detectors.hpp"
#include "auditod/error.hpp"
#include "auditod/neighbors.hpp"

namespace auditod {

namespace {

std::size_t checked_k(const FeatureFrame& frame, int n_neighbors, const char* who) {
  if (n_neighbors < 1 || static_cast<std::size_t>(n_neighbors) >= frame.rows()) {
    throw Error(ErrorCode::InvalidConfig, std::string(who) + " n_neighbors must be in [1, n-1]");
  }
  return static_cast<std::size_t>(n_neighbors);
}

// Added to the mean reachability distance so that duplicate groups larger
// than k get a large finite density instead of a division by zero.
constexpr double kReachEpsilon = 1e-10;

}  // namespace

ScoreVector score_knn(const FeatureFrame& frame, int n_neighbors, KnnMode mode) {
  const std::size_t k = checked_k(frame, n_neighbors, "KNN");
  const NeighborIndex index(frame);
  std::vector<double> scores(frame.rows());
  for (std::size_t i = 0; i < frame.rows(); ++i) {
    const auto nn = index.query_row(i, k);
    if (mode == KnnMode::Kth) {
      scores[i] = nn.back().distance;
    } else {
      double sum = 0.0;
      for (const auto& n : nn) sum += n.distance;
      scores[i] = sum / static_cast<double>(k);
    }
  }
  return {"KNN", frame.ids(), std::move(scores), false};
}

ScoreVector score_lof(const FeatureFrame& frame, int n_neighbors) {
  const std::size_t k = checked_k(frame, n_neighbors, "LOF");
  const std::size_t n = frame.rows();
  const auto knn = NeighborIndex(frame).all_knn(k);

  std::vector<double> k_distance(n);
  for (std::size_t i = 0; i < n; ++i) k_distance[i] = knn[i].back().distance;

  std::vector<double> lrd(n);
  for (std::size_t i = 0; i < n; ++i) {
    double reach = 0.0;
    for (const auto& nb : knn[i]) reach += std::max(k_distance[nb.index], nb.distance);
    lrd[i] = 1.0 / (reach / static_cast<double>(k) + kReachEpsilon);
  }

  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ratio = 0.0;
    for (const auto& nb : knn[i]) ratio += lrd[nb.index] / lrd[i];
    scores[i] = ratio / static_cast<double>(k);
  }
  return {"LOF", frame.ids(), std::move(scores), false};
}

}  // namespace auditod
