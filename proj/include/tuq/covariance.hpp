#pragma once

#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace tuq {

/// Validated symmetric positive-semidefinite matrix. Construction symmetrizes
/// after checking symmetry to 1e-10 (relative) and eigenvalues down to
/// -1e-8 * lambda_max.
class CovarianceMatrix {
 public:
  explicit CovarianceMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols())
      throw std::invalid_argument("CovarianceMatrix: matrix must be square");
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw std::invalid_argument("CovarianceMatrix: not symmetric");
    m_ = 0.5 * (m_ + m_.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        m_, Eigen::EigenvaluesOnly);
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    if (es.eigenvalues().minCoeff() < -1e-8 * std::max(lmax, 1e-300))
      throw std::invalid_argument("CovarianceMatrix: not positive semidefinite");
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

/// Unbiased sample covariance (divisor n-1) of the rows of `samples`.
inline CovarianceMatrix estimate_covariance(
    const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  const Eigen::Index n = samples.rows();
  if (n < 2)
    throw std::invalid_argument("estimate_covariance: need at least 2 samples");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();
  return CovarianceMatrix(std::move(cov));
}

}  // namespace tuq
