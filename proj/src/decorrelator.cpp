#include "tuq/decorrelator.hpp"

#include <stdexcept>

namespace tuq {

Decorrelator Decorrelator::from_parts(Eigen::MatrixXd basis,
                                      Eigen::VectorXd scale) {
  if (basis.rows() != scale.size() || (scale.array() <= 0.0).any())
    throw std::invalid_argument("Decorrelator: invalid spectral data");
  Decorrelator dec;
  dec.basis_ = std::move(basis);
  dec.scale_ = std::move(scale);
  return dec;
}

Decorrelator Decorrelator::fit(const CovarianceMatrix& s,
                               double rel_truncation) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.matrix());
  if (es.info() != Eigen::Success)
    throw std::runtime_error("Decorrelator: eigendecomposition failed");
  const Eigen::VectorXd& lambda = es.eigenvalues();  // ascending
  const double lmax = std::max(lambda.maxCoeff(), 0.0);
  const double cutoff = rel_truncation * std::max(lmax, 1e-300);

  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda[i] > cutoff) ++kept;
  if (kept == 0)
    throw std::runtime_error("Decorrelator: covariance has no usable spectrum");

  Decorrelator dec;
  dec.basis_.resize(kept, s.dim());
  dec.scale_.resize(kept);
  // Strongest directions first.
  for (Eigen::Index r = 0; r < kept; ++r) {
    const Eigen::Index i = lambda.size() - 1 - r;
    dec.basis_.row(r) = es.eigenvectors().col(i).transpose();
    dec.scale_[r] = std::sqrt(lambda[i]);
  }
  return dec;
}

}  // namespace tuq
