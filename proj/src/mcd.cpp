#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "auditod/detectors.hpp"
#include "auditod/error.hpp"
#include "auditod/rng.hpp"

namespace auditod {

namespace {

using Matrix = FeatureFrame::Matrix;

struct Estimate {
  Eigen::VectorXd location;
  Eigen::MatrixXd covariance;
  Eigen::LLT<Eigen::MatrixXd> chol;
  double log_det = 0.0;
};

// Maximum-likelihood mean/covariance of the selected rows, regularized when
// near-singular; throws DegenerateCovariance if still not positive definite.
Estimate estimate(const Matrix& x, const std::vector<std::size_t>& rows) {
  const auto p = x.cols();
  Estimate e;
  e.location = Eigen::VectorXd::Zero(p);
  for (std::size_t r : rows) e.location += x.row(r).transpose();
  e.location /= static_cast<double>(rows.size());
  e.covariance = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t r : rows) {
    const Eigen::VectorXd d = x.row(r).transpose() - e.location;
    e.covariance.selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  e.covariance = e.covariance.selfadjointView<Eigen::Lower>();
  e.covariance /= static_cast<double>(rows.size());

  e.chol.compute(e.covariance);
  if (e.chol.info() != Eigen::Success || e.chol.rcond() < 1e-12) {
    const double trace = e.covariance.trace();
    e.covariance.diagonal().array() += 1e-9 * trace / static_cast<double>(p);
    e.chol.compute(e.covariance);
    if (trace <= 0.0 || e.chol.info() != Eigen::Success) {
      throw Error(ErrorCode::DegenerateCovariance,
                  "covariance of " + std::to_string(rows.size()) + " records is singular");
    }
  }
  e.log_det = 2.0 * e.chol.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return e;
}

std::vector<double> squared_mahalanobis(const Matrix& x, const Estimate& e) {
  Eigen::MatrixXd centered = (x.rowwise() - e.location.transpose()).transpose();  // p x n
  e.chol.matrixL().solveInPlace(centered);
  std::vector<double> d2(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) d2[i] = centered.col(i).squaredNorm();
  return d2;
}

std::vector<std::size_t> smallest(const std::vector<double>& d2, std::size_t h) {
  std::vector<std::size_t> idx(d2.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) { return d2[a] < d2[b] || (d2[a] == d2[b] && a < b); };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(h - 1), idx.end(), less);
  idx.resize(h);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

McdFit fit_mcd(const FeatureFrame& frame, double support_fraction, std::uint64_t seed, int trials) {
  const std::size_t n = frame.rows();
  const std::size_t p = frame.cols();
  if (!(support_fraction >= 0.0 && support_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "MCD support_fraction must be in [0, 1]");
  }
  if (n <= p + 1) throw Error(ErrorCode::InvalidConfig, "MCD needs more than p + 1 records");
  const auto wanted = static_cast<std::size_t>(std::ceil(support_fraction * static_cast<double>(n)));
  const std::size_t h = std::min(n, std::max(wanted, p + 2));

  const Matrix& x = frame.values();
  Rng rng(seed);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});

  int degenerate = 0;
  McdFit best;
  best.log_determinant = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    // Partial Fisher-Yates for a (p+1)-subset.
    for (std::size_t i = 0; i <= p; ++i) {
      const std::size_t j = i + rng.below(n - i);
      std::swap(pool[i], pool[j]);
    }
    std::vector<std::size_t> support(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(p + 1));
    std::sort(support.begin(), support.end());

    Estimate current;
    std::vector<std::size_t> current_support = support;
    try {
      current = estimate(x, support);
      bool refined = false;
      for (int step = 0; step < kMcdMaxCSteps; ++step) {
        auto next_support = smallest(squared_mahalanobis(x, current), h);
        if (refined && next_support == current_support) break;
        Estimate next = estimate(x, next_support);
        if (refined && !(next.log_det < current.log_det)) break;
        current = std::move(next);
        current_support = std::move(next_support);
        refined = true;
      }
    } catch (const Error& err) {
      if (err.code() != ErrorCode::DegenerateCovariance) throw;
      ++degenerate;
      continue;
    }
    if (current.log_det < best.log_determinant) {
      best.location = current.location;
      best.covariance = current.covariance;
      best.log_determinant = current.log_det;
      best.support = current_support;
    }
  }
  if (degenerate == trials) {
    throw Error(ErrorCode::DegenerateCovariance,
                "every MCD trial produced a singular covariance (h = " + std::to_string(h) + ")");
  }
  return best;
}

ScoreVector score_mcd(const FeatureFrame& frame, double support_fraction, std::uint64_t seed) {
  const McdFit fit = fit_mcd(frame, support_fraction, seed);
  Estimate e;
  e.location = fit.location;
  e.covariance = fit.covariance;
  e.chol.compute(fit.covariance);
  if (e.chol.info() != Eigen::Success) {
    throw Error(ErrorCode::DegenerateCovariance, "robust covariance is not positive definite");
  }
  auto d2 = squared_mahalanobis(frame.values(), e);
  std::vector<double> scores(d2.size());
  std::transform(d2.begin(), d2.end(), scores.begin(), [](double v) { return std::sqrt(v); });
  return {"MCD", frame.ids(), std::move(scores), false};
}

}  // namespace auditod
