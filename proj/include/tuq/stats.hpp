#pragma once

#include <vector>

#include <Eigen/Dense>

namespace tuq {

/// Spearman rank correlation with average ranks for ties.
double spearman_rank_correlation(const std::vector<double>& a,
                                 const std::vector<double>& b);

/// Product Gaussian kernel density estimate in 2 dimensions with Scott's-rule
/// bandwidth.
class Kde2d {
 public:
  static Kde2d fit(const Eigen::MatrixXd& samples);

  double operator()(const Eigen::Vector2d& x) const;
  const Eigen::Vector2d& bandwidth() const { return bandwidth_; }

 private:
  Eigen::MatrixXd samples_;  // n x 2
  Eigen::Vector2d bandwidth_;
};

/// Whether `point` lies inside the highest-density region containing `mass`
/// of the sample-based posterior: the KDE density at the point is compared
/// against the (1 - mass) quantile of the KDE densities at the samples.
bool hdr_contains(const Eigen::MatrixXd& samples, const Eigen::Vector2d& point,
                  double mass);

/// Empirical quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double q);

}  // namespace tuq
