#include "tuq/oracle.hpp"

#include <cmath>

namespace tuq {

GridPosterior grid_posterior(const MeanMap& mean_map,
                             const Eigen::VectorXd& data,
                             const CovarianceMatrix& noise_cov,
                             const GaussianPrior& prior,
                             const GridConfig& cfg) {
  if (prior.dim() != 2)
    throw std::invalid_argument("grid_posterior: 2-dim parameters only");
  if (cfg.n_per_axis < 3)
    throw std::invalid_argument("grid_posterior: grid too coarse");

  const int n = cfg.n_per_axis;
  GridPosterior gp;
  for (int axis = 0; axis < 2; ++axis) {
    const double sd = std::sqrt(prior.cov(axis, axis));
    const double lo = prior.mean[axis] - cfg.half_width_sds * sd;
    const double hi = prior.mean[axis] + cfg.half_width_sds * sd;
    Eigen::VectorXd& ax = axis == 0 ? gp.axis1 : gp.axis2;
    ax = Eigen::VectorXd::LinSpaced(n, lo, hi);
  }

  const Eigen::LLT<Eigen::MatrixXd> noise_llt(noise_cov.matrix());
  if (noise_llt.info() != Eigen::Success)
    throw std::invalid_argument("grid_posterior: noise covariance not SPD");
  const Eigen::LLT<Eigen::MatrixXd> prior_llt(prior.cov);
  if (prior_llt.info() != Eigen::Success)
    throw std::invalid_argument("grid_posterior: prior covariance not SPD");

  Eigen::MatrixXd log_post(n, n);
  Eigen::Vector2d theta;
  for (int i = 0; i < n; ++i) {
    theta[0] = gp.axis1[i];
    for (int j = 0; j < n; ++j) {
      theta[1] = gp.axis2[j];
      const Eigen::VectorXd r = data - mean_map(theta);
      const Eigen::VectorXd pr = theta - prior.mean;
      log_post(i, j) = -0.5 * r.dot(noise_llt.solve(r)) -
                       0.5 * pr.dot(prior_llt.solve(pr));
    }
  }

  // Trapezoid quadrature weights, normalized.
  Eigen::VectorXd w1 = Eigen::VectorXd::Ones(n);
  w1[0] = w1[n - 1] = 0.5;
  const double max_lp = log_post.maxCoeff();
  gp.weights = (log_post.array() - max_lp).exp().matrix();
  gp.weights = w1.asDiagonal() * gp.weights * w1.asDiagonal();
  const double total = gp.weights.sum();
  if (!(total > 0.0))
    throw std::runtime_error("grid_posterior: vanishing posterior mass");
  gp.weights /= total;

  double boundary_mass = gp.weights.row(0).sum() + gp.weights.row(n - 1).sum() +
                         gp.weights.col(0).sum() + gp.weights.col(n - 1).sum();
  if (boundary_mass > cfg.boundary_mass_tol)
    throw GridTooNarrow("grid_posterior: posterior mass at grid boundary (" +
                        std::to_string(boundary_mass) + "); widen the grid");

  gp.mean.setZero();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      gp.mean += gp.weights(i, j) * Eigen::Vector2d(gp.axis1[i], gp.axis2[j]);
  gp.cov.setZero();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::Vector2d d =
          Eigen::Vector2d(gp.axis1[i], gp.axis2[j]) - gp.mean;
      gp.cov += gp.weights(i, j) * (d * d.transpose());
    }
  const double det = gp.cov.determinant();
  if (!(det > 0.0))
    throw std::runtime_error("grid_posterior: degenerate posterior covariance");
  gp.logdet_cov = std::log(det);
  return gp;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> kalman_posterior(
    const Eigen::MatrixXd& a, const GaussianPrior& prior,
    const Eigen::VectorXd& data, const CovarianceMatrix& noise_cov) {
  if (a.cols() != prior.dim() || a.rows() != data.size() ||
      noise_cov.dim() != data.size())
    throw std::invalid_argument("kalman_posterior: dimension mismatch");
  const Eigen::LLT<Eigen::MatrixXd> noise_llt(noise_cov.matrix());
  const Eigen::LLT<Eigen::MatrixXd> prior_llt(prior.cov);
  if (noise_llt.info() != Eigen::Success || prior_llt.info() != Eigen::Success)
    throw std::invalid_argument("kalman_posterior: singular inputs");

  const Eigen::MatrixXd precision =
      a.transpose() * noise_llt.solve(a) +
      prior_llt.solve(Eigen::MatrixXd::Identity(prior.dim(), prior.dim()));
  const Eigen::LLT<Eigen::MatrixXd> post_llt(precision);
  if (post_llt.info() != Eigen::Success)
    throw std::invalid_argument("kalman_posterior: singular information matrix");
  const Eigen::MatrixXd cov =
      post_llt.solve(Eigen::MatrixXd::Identity(prior.dim(), prior.dim()));
  const Eigen::VectorXd mean = post_llt.solve(
      a.transpose() * noise_llt.solve(data) + prior_llt.solve(prior.mean));
  return {mean, cov};
}

}  // namespace tuq
