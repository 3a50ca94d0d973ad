#pragma once

#include <functional>
#include <utility>

#include <Eigen/Dense>

#include "tuq/covariance.hpp"
#include "tuq/params.hpp"

namespace tuq {

using MeanMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct GridConfig {
  int n_per_axis = 401;
  double half_width_sds = 5.0;     ///< grid reach in prior standard deviations
  double boundary_mass_tol = 1e-3;
};

/// Brute-force posterior on a tensor-product grid over a 2-dim parameter
/// space, normalized by trapezoid quadrature.
struct GridPosterior {
  Eigen::VectorXd axis1, axis2;
  Eigen::MatrixXd weights;  ///< n1 x n2, sums to 1
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
  double logdet_cov = 0.0;
};

/// Thrown when significant posterior mass touches the grid boundary; rerun
/// with a wider grid.
struct GridTooNarrow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Evaluates log N(data; mean_map(theta), noise_cov) + log N(theta; m, C) on
/// the grid and returns normalized weights and moments.
GridPosterior grid_posterior(const MeanMap& mean_map,
                             const Eigen::VectorXd& data,
                             const CovarianceMatrix& noise_cov,
                             const GaussianPrior& prior,
                             const GridConfig& cfg = {});

/// Closed-form Gaussian posterior for a linear map:
///   cov = (A^T Gamma^-1 A + C^-1)^-1,
///   mean = cov (A^T Gamma^-1 data + C^-1 m).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> kalman_posterior(
    const Eigen::MatrixXd& a, const GaussianPrior& prior,
    const Eigen::VectorXd& data, const CovarianceMatrix& noise_cov);

}  // namespace tuq
