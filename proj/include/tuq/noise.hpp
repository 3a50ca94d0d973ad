#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "tuq/covariance.hpp"
#include "tuq/design_space.hpp"

namespace tuq {

/// Closed interval of physically admissible values for one statistics row.
/// Either endpoint may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains_strict(double x) const { return x > lo && x < hi; }

  /// Euclidean distance from x to the nearest finite endpoint; +inf if the
  /// interval is unbounded on both sides.
  double boundary_distance(double x) const {
    double d = std::numeric_limits<double>::infinity();
    if (std::isfinite(lo)) d = std::min(d, std::abs(x - lo));
    if (std::isfinite(hi)) d = std::min(d, std::abs(x - hi));
    return d;
  }
};

/// Diagonal synthetic-observation noise Delta = diag(d_i^2).
struct NoiseModel {
  Eigen::VectorXd d;  ///< per-row standard deviations, all > 0

  Eigen::VectorXd variances() const { return d.array().square(); }
  Eigen::MatrixXd delta() const {
    return Eigen::MatrixXd(variances().asDiagonal());
  }
  NoiseModel restricted(const Restriction& w) const {
    return NoiseModel{restrict_vector(w, d)};
  }
};

/// Noise standard deviations proportional to the row means, capped so a
/// 2-sigma excursion cannot cross the physical boundary:
///   d_i = min(C * min(dist(mu_i + 2*sqrt(S_ii), dOmega_i),
///                     dist(mu_i - 2*sqrt(S_ii), dOmega_i)),
///             C_max * mu_i).
inline NoiseModel build_obs_noise(const Eigen::VectorXd& mu,
                                  const CovarianceMatrix& s,
                                  const std::vector<Interval>& bounds,
                                  double c, double c_max) {
  if (mu.size() != s.dim() ||
      bounds.size() != static_cast<std::size_t>(mu.size()))
    throw std::invalid_argument("build_obs_noise: dimension mismatch");
  if (!(c > 0.0) || !(c_max > 0.0))
    throw std::invalid_argument("build_obs_noise: C and C_max must be > 0");

  Eigen::VectorXd d(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const Interval& omega = bounds[static_cast<std::size_t>(i)];
    if (!omega.contains_strict(mu[i]))
      throw std::invalid_argument(
          "build_obs_noise: mean lies outside its physical interval");
    const double sii = s.matrix()(i, i);
    if (sii < 0.0)
      throw std::invalid_argument("build_obs_noise: negative variance entry");
    const double sd = std::sqrt(sii);
    const double dist = std::min(omega.boundary_distance(mu[i] + 2.0 * sd),
                                 omega.boundary_distance(mu[i] - 2.0 * sd));
    d[i] = std::min(c * dist, c_max * mu[i]);
    if (!(d[i] > 0.0))
      throw std::invalid_argument(
          "build_obs_noise: nonpositive noise level (row mean must be > 0 "
          "and strictly inside its interval)");
  }
  return NoiseModel{std::move(d)};
}

}  // namespace tuq
