#include <cmath>
#include <numeric>

#include "auditod/detectors.hpp"
#include "auditod/error.hpp"
#include "auditod/rng.hpp"

namespace auditod {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;

struct Node {
  int feature = -1;  // -1 for leaves
  double split = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  std::size_t size = 0;
};

class IsolationTree {
 public:
  IsolationTree(const FeatureFrame::Matrix& x, std::vector<std::size_t> sample, int height_limit, Rng& rng)
      : x_(x), limit_(height_limit) {
    build(sample, 0, sample.size(), 0, rng);
  }

  double path_length(std::size_t row) const {
    std::size_t id = 0;
    int depth = 0;
    while (nodes_[id].feature >= 0) {
      const Node& node = nodes_[id];
      id = x_(row, node.feature) < node.split ? node.left : node.right;
      ++depth;
    }
    return depth + iforest_average_path(nodes_[id].size);
  }

 private:
  std::size_t build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end, int depth, Rng& rng) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({-1, 0.0, 0, 0, end - begin});
    if (depth >= limit_ || end - begin <= 1) return id;

    std::vector<int> candidates;
    std::vector<double> lo, hi;
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      double mn = x_(idx[begin], f), mx = mn;
      for (std::size_t i = begin + 1; i < end; ++i) {
        mn = std::min(mn, x_(idx[i], f));
        mx = std::max(mx, x_(idx[i], f));
      }
      if (mx > mn) {
        candidates.push_back(static_cast<int>(f));
        lo.push_back(mn);
        hi.push_back(mx);
      }
    }
    if (candidates.empty()) return id;

    const std::size_t pick = rng.below(candidates.size());
    const int feature = candidates[pick];
    double split = lo[pick];
    while (!(split > lo[pick])) split = rng.uniform(lo[pick], hi[pick]);

    auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                              idx.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](std::size_t r) { return x_(r, feature) < split; });
    const auto m = static_cast<std::size_t>(mid - idx.begin());
    const std::size_t left = build(idx, begin, m, depth + 1, rng);
    const std::size_t right = build(idx, m, end, depth + 1, rng);
    nodes_[id].feature = feature;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  const FeatureFrame::Matrix& x_;
  int limit_;
  std::vector<Node> nodes_;
};

}  // namespace

double iforest_average_path(std::size_t m) {
  if (m <= 1) return 0.0;
  if (m == 2) return 1.0;
  const double mm = static_cast<double>(m);
  return 2.0 * (std::log(mm - 1.0) + kEulerGamma) - 2.0 * (mm - 1.0) / mm;
}

double iforest_score(double mean_path, std::size_t subsample) {
  return std::exp2(-mean_path / iforest_average_path(subsample));
}

ScoreVector score_iforest(const FeatureFrame& frame, int n_estimators, int subsample, std::uint64_t seed) {
  if (n_estimators < 1) throw Error(ErrorCode::InvalidConfig, "IFOREST n_estimators must be >= 1");
  if (subsample < 2) throw Error(ErrorCode::InvalidConfig, "IFOREST subsample must be >= 2");
  const std::size_t n = frame.rows();
  const std::size_t psi = std::min<std::size_t>(static_cast<std::size_t>(subsample), n);
  const int height_limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));

  Rng rng(seed);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<double> total(n, 0.0);
  for (int t = 0; t < n_estimators; ++t) {
    for (std::size_t i = 0; i < psi; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
    std::vector<std::size_t> sample(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(psi));
    const IsolationTree tree(frame.values(), std::move(sample), height_limit, rng);
    for (std::size_t r = 0; r < n; ++r) total[r] += tree.path_length(r);
  }
  std::vector<double> scores(n);
  for (std::size_t r = 0; r < n; ++r) {
    scores[r] = iforest_score(total[r] / static_cast<double>(n_estimators), psi);
  }
  return {"IFOREST", frame.ids(), std::move(scores), false};
}

}  // namespace auditod
