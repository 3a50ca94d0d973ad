#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace tuq {

template <typename Scalar>
Scalar logit(Scalar p) {
  return std::log(p / (Scalar(1) - p));
}

/// Numerically stable logistic; saturates to {0,1} without overflow.
template <typename Scalar>
Scalar logistic(Scalar x) {
  if (x >= Scalar(0)) {
    const Scalar e = std::exp(-x);
    return Scalar(1) / (Scalar(1) + e);
  }
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// Physical convection parameters: reference relative humidity and
/// relaxation timescale.
struct PhysicalParams {
  double rh;     ///< dimensionless, in (0,1)
  double tau_s;  ///< seconds, > 0

  bool valid() const {
    return std::isfinite(rh) && std::isfinite(tau_s) && rh > 0.0 && rh < 1.0 &&
           tau_s > 0.0;
  }
};

/// Unconstrained computational parameters theta = (logit(rh), ln(tau/1s)).
struct ComputationalParams {
  Eigen::Vector2d theta;

  bool valid() const { return theta.allFinite(); }
};

inline ComputationalParams transform_forward(const PhysicalParams& p) {
  if (!(p.rh > 0.0 && p.rh < 1.0))
    throw std::domain_error("transform_forward: rh must lie in (0,1)");
  if (!(p.tau_s > 0.0))
    throw std::domain_error("transform_forward: tau must be positive");
  return {Eigen::Vector2d(logit(p.rh), std::log(p.tau_s))};
}

inline PhysicalParams transform_inverse(const ComputationalParams& c) {
  if (!c.valid())
    throw std::domain_error("transform_inverse: theta must be finite");
  return {logistic(c.theta[0]), std::exp(c.theta[1])};
}

inline PhysicalParams transform_inverse(const Eigen::Vector2d& theta) {
  return transform_inverse(ComputationalParams{theta});
}

/// Gaussian prior N(m, C) on the computational parameters. The covariance is
/// required symmetric and positive semidefinite at construction; strict
/// positivity is checked where an inverse is actually needed, so degenerate
/// (e.g. zero) covariances remain usable for deterministic ensembles.
struct GaussianPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  GaussianPrior(Eigen::VectorXd m, Eigen::MatrixXd c)
      : mean(std::move(m)), cov(std::move(c)) {
    if (cov.rows() != cov.cols() || cov.rows() != mean.size())
      throw std::invalid_argument("GaussianPrior: dimension mismatch");
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw std::invalid_argument("GaussianPrior: covariance not symmetric");
    cov = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(lmax, 1.0))
      throw std::invalid_argument(
          "GaussianPrior: covariance has negative eigenvalues");
  }

  Eigen::Index dim() const { return mean.size(); }

  /// Symmetric PSD square root, valid also for rank-deficient covariances.
  Eigen::MatrixXd sqrt() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
  }

  /// ||theta - m||^2_C, the prior Mahalanobis term. Requires SPD covariance.
  double mahalanobis_sq(const Eigen::VectorXd& theta) const {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("GaussianPrior: covariance not positive definite");
    const Eigen::VectorXd r = theta - mean;
    return r.dot(llt.solve(r));
  }
};

/// Prior constants in computational space. Defaults encode a logit-normal
/// reference humidity, RH ~ Logitnormal(0,1), and a lognormal timescale with
/// median 12 h and log-variance ln 2, so the prior mean maps back to the
/// physical values (0.5, 12 h).
struct PriorConfig {
  double theta1_mean = 0.0;
  double theta1_var = 1.0;
  double theta2_mean = std::log(43200.0);
  double theta2_var = std::log(2.0);
};

inline GaussianPrior build_prior(const PriorConfig& cfg = {}) {
  Eigen::Vector2d m(cfg.theta1_mean, cfg.theta2_mean);
  Eigen::Matrix2d c = Eigen::Vector2d(cfg.theta1_var, cfg.theta2_var).asDiagonal();
  return GaussianPrior(m, c);
}

}  // namespace tuq
