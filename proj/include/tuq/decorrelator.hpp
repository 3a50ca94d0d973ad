#pragma once

#include <Eigen/Dense>

#include "tuq/covariance.hpp"

namespace tuq {

/// Whitening change of basis from the eigendecomposition of a covariance
/// matrix: rows of `basis` are the retained eigenvector directions and
/// `scale` the corresponding standard deviations, so that
/// whiten(x) = scale^{-1} * basis * x has unit covariance when x has
/// covariance S. Directions with eigenvalues below rel_truncation * lambda_max
/// are dropped.
class Decorrelator {
 public:
  static Decorrelator fit(const CovarianceMatrix& s,
                          double rel_truncation = 1e-12);

  /// Reassembles a decorrelator from stored spectral data (basis rows and
  /// per-direction standard deviations), bit-faithfully.
  static Decorrelator from_parts(Eigen::MatrixXd basis, Eigen::VectorXd scale);

  Eigen::Index input_dim() const { return basis_.cols(); }
  Eigen::Index output_dim() const { return basis_.rows(); }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::VectorXd& scale() const { return scale_; }

  Eigen::VectorXd whiten(const Eigen::VectorXd& x) const {
    return scale_.cwiseInverse().asDiagonal() * (basis_ * x);
  }

  /// Whitens each row of a sample matrix.
  Eigen::MatrixXd whiten_rows(const Eigen::MatrixXd& samples) const {
    return (samples * basis_.transpose()) * scale_.cwiseInverse().asDiagonal();
  }

  /// Pushes a covariance through the whitening map: B S B^T scaled.
  Eigen::MatrixXd whiten_cov(const Eigen::MatrixXd& s) const {
    const auto inv = scale_.cwiseInverse().asDiagonal();
    return inv * (basis_ * s * basis_.transpose()) * inv;
  }

 private:
  Eigen::MatrixXd basis_;  // r x d, orthonormal rows
  Eigen::VectorXd scale_;  // r
};

inline Decorrelator fit_decorrelator(const CovarianceMatrix& s,
                                     double rel_truncation = 1e-12) {
  return Decorrelator::fit(s, rel_truncation);
}

}  // namespace tuq
