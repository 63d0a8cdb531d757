#include <algorithm>
#include <limits>
#include <numeric>

#include "auditod/detectors.hpp"
#include "auditod/error.hpp"
#include "auditod/neighbors.hpp"
#include "auditod/rng.hpp"

namespace auditod {

namespace {

std::span<const double> centroid_row(const Eigen::MatrixXd& c, Eigen::Index k, std::vector<double>& buf) {
  buf.resize(static_cast<std::size_t>(c.cols()));
  for (Eigen::Index j = 0; j < c.cols(); ++j) buf[j] = c(k, j);
  return buf;
}

// k-means++ seeding.
Eigen::MatrixXd seed_centroids(const FeatureFrame& frame, std::size_t k, Rng& rng) {
  const std::size_t n = frame.rows();
  const std::size_t p = frame.cols();
  Eigen::MatrixXd centroids(k, p);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < p; ++j) centroids(c, j) = frame.values()(pick, j);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(frame.row(i), frame.row(pick)));
      total += nearest[i];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = rng.below(n);
      continue;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += nearest[i];
      if (acc > target && nearest[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const FeatureFrame& frame, int k, std::uint64_t seed, int max_iterations,
                    double tolerance) {
  const std::size_t n = frame.rows();
  const std::size_t p = frame.cols();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw Error(ErrorCode::InvalidConfig, "n_clusters must be in [1, n]");
  }
  const auto kk = static_cast<std::size_t>(k);
  Rng rng(seed);
  KMeansResult result;
  result.centroids = seed_centroids(frame, kk, rng);
  result.labels.assign(n, 0);

  std::vector<double> buf;
  std::vector<double> own_distance(n);
  for (int iter = 1; iter <= max_iterations; ++iter) {
    result.iterations = iter;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t label = 0;
      for (std::size_t c = 0; c < kk; ++c) {
        const double d = squared_distance(frame.row(i), centroid_row(result.centroids, c, buf));
        if (d < best) {
          best = d;
          label = c;
        }
      }
      result.labels[i] = label;
      own_distance[i] = best;
    }

    Eigen::MatrixXd updated = Eigen::MatrixXd::Zero(kk, p);
    std::vector<std::size_t> sizes(kk, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = frame.row(i);
      for (std::size_t j = 0; j < p; ++j) updated(result.labels[i], j) += row[j];
      ++sizes[result.labels[i]];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < kk; ++c) {
      if (sizes[c] > 0) {
        updated.row(c) /= static_cast<double>(sizes[c]);
        continue;
      }
      // Empty cluster: reseed at the point farthest from its own centroid.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && own_distance[i] > far_d) {
          far_d = own_distance[i];
          far = i;
        }
      }
      taken[far] = true;
      own_distance[far] = 0.0;
      for (std::size_t j = 0; j < p; ++j) updated(c, j) = frame.values()(far, j);
    }
    const double shift = (updated - result.centroids).squaredNorm();
    result.centroids = std::move(updated);
    if (shift <= tolerance) {
      result.converged = true;
      break;
    }
  }
  // Final assignment against the final centroids.
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < kk; ++c) {
      const double d = squared_distance(frame.row(i), centroid_row(result.centroids, c, buf));
      if (d < best) {
        best = d;
        result.labels[i] = c;
      }
    }
  }
  return result;
}

std::size_t cblof_large_cluster_count(const std::vector<std::size_t>& sorted_sizes, std::size_t n,
                                      double alpha, double beta) {
  const std::size_t k = sorted_sizes.size();
  std::size_t cumulative = 0;
  for (std::size_t b = 1; b <= k; ++b) {
    cumulative += sorted_sizes[b - 1];
    if (static_cast<double>(cumulative) >= alpha * static_cast<double>(n)) return b;
    if (b < k && sorted_sizes[b] > 0 &&
        static_cast<double>(sorted_sizes[b - 1]) / static_cast<double>(sorted_sizes[b]) >= beta) {
      return b;
    }
    if (b < k && sorted_sizes[b] == 0) return b;
  }
  return k;
}

ScoreVector score_cblof(const FeatureFrame& frame, int n_clusters, double alpha, double beta,
                        std::uint64_t seed) {
  if (!(alpha > 0.5 && alpha <= 1.0)) throw Error(ErrorCode::InvalidConfig, "CBLOF alpha must be in (0.5, 1]");
  if (!(beta > 1.0)) throw Error(ErrorCode::InvalidConfig, "CBLOF beta must be > 1");
  const KMeansResult km = kmeans(frame, n_clusters, seed);
  const auto k = static_cast<std::size_t>(n_clusters);
  const std::size_t n = frame.rows();

  std::vector<std::size_t> sizes(k, 0);
  for (auto label : km.labels) ++sizes[label];
  std::vector<std::size_t> by_size(k);
  std::iota(by_size.begin(), by_size.end(), std::size_t{0});
  std::stable_sort(by_size.begin(), by_size.end(),
                   [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
  std::vector<std::size_t> sorted_sizes(k);
  for (std::size_t i = 0; i < k; ++i) sorted_sizes[i] = sizes[by_size[i]];
  const std::size_t large_count = cblof_large_cluster_count(sorted_sizes, n, alpha, beta);

  std::vector<bool> large(k, false);
  for (std::size_t i = 0; i < large_count; ++i) large[by_size[i]] = true;

  std::vector<double> buf;
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = km.labels[i];
    if (large[label]) {
      scores[i] = euclidean_distance(frame.row(i), centroid_row(km.centroids, label, buf));
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (!large[c]) continue;
      best = std::min(best, euclidean_distance(frame.row(i), centroid_row(km.centroids, c, buf)));
    }
    scores[i] = best;
  }
  return {"CBLOF", frame.ids(), std::move(scores), false};
}

}  // namespace auditod
