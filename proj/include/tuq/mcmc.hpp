#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tuq/covariance.hpp"
#include "tuq/gp.hpp"
#include "tuq/params.hpp"

namespace tuq {

struct McmcConfig {
  int n_samples = 50000;
  double burn_fraction = 0.25;
  int thinning = 5;
  double target_acceptance = 0.3;
  double init_step = 0.5;
  bool adapt = true;  ///< Robbins-Monro step adaptation during burn-in
};

/// Retained (post burn-in, thinned) draws from one random-walk chain.
struct PosteriorSampleSet {
  Eigen::MatrixXd samples;  ///< n x p
  double acceptance_rate = 0.0;  ///< over post burn-in steps
  std::string design_label;
  std::uint64_t seed = 0;
  double final_step = 0.0;
  std::vector<double> step_trace;  ///< step scale at regular intervals

  Eigen::Index size() const { return samples.rows(); }
};

using LogDensity = std::function<double(const Eigen::VectorXd&)>;

/// Negative MCMC objective: -[ 1/2 ||data - m(theta)||^2_{Sigma_GP(theta)}
/// + 1/2 log det Sigma_GP(theta) + 1/2 ||theta - m||^2_C ], with the
/// emulator's diagonal predictive covariance. Non-finite emulator output
/// yields -inf so the proposal is rejected.
double log_posterior(const Eigen::VectorXd& theta, const Eigen::VectorXd& data,
                     const GpEmulator& em, const GaussianPrior& prior);

/// Random-walk Metropolis with proposals theta' = theta + s * L * xi, where
/// L is a square root of the prior covariance. The step scale adapts toward
/// the target acceptance during burn-in and is frozen afterwards.
PosteriorSampleSet run_chain(const LogDensity& log_target,
                             const Eigen::VectorXd& start,
                             const Eigen::MatrixXd& proposal_sqrt,
                             const McmcConfig& cfg, std::uint64_t seed);

/// Convenience overload sampling the emulated posterior.
PosteriorSampleSet run_chain(const GpEmulator& em, const Eigen::VectorXd& data,
                             const GaussianPrior& prior,
                             const Eigen::VectorXd& start,
                             const McmcConfig& cfg, std::uint64_t seed);

/// Unbiased empirical covariance of the retained samples.
CovarianceMatrix posterior_cov(const PosteriorSampleSet& ps);

}  // namespace tuq
