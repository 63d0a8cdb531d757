#include <Eigen/Eigenvalues>

#include "auditod/detectors.hpp"
#include "auditod/error.hpp"

namespace auditod {

ScoreVector score_pca(const FeatureFrame& frame, int n_components) {
  const auto p = static_cast<Eigen::Index>(frame.cols());
  if (n_components < 0 || n_components > p) {
    throw Error(ErrorCode::InvalidConfig, "PCA n_components must be in [0, p]");
  }
  const Eigen::MatrixXd x = frame.values();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;

  std::vector<double> scores(frame.rows());
  if (n_components == 0) {
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = centered.row(i).squaredNorm();
    return {"PCA", frame.ids(), std::move(scores), false};
  }

  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(std::max<Eigen::Index>(x.rows() - 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::EigenFailure, "covariance eigendecomposition did not converge");
  }
  // Eigenvalues ascend; the top components are the rightmost columns.
  const Eigen::MatrixXd basis = eig.eigenvectors().rightCols(n_components);
  const Eigen::MatrixXd residual = centered - (centered * basis) * basis.transpose();
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = residual.row(i).squaredNorm();
  return {"PCA", frame.ids(), std::move(scores), false};
}

}  // namespace auditod
