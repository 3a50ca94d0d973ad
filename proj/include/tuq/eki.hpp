#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "tuq/covariance.hpp"
#include "tuq/params.hpp"

namespace tuq {

/// Particle ensemble for Kalman inversion: J parameter vectors and, once
/// evaluated, the paired forward-map outputs.
struct Ensemble {
  Eigen::MatrixXd members;  ///< J x p
  Eigen::MatrixXd evals;    ///< J x d, valid iff has_evals
  bool has_evals = false;
  int iteration = 0;

  Eigen::Index size() const { return members.rows(); }
  Eigen::Index param_dim() const { return members.cols(); }
};

/// All evaluated input-output pairs accumulated over the inversion, the
/// training set consumed by emulation.
struct TrainingSet {
  Eigen::MatrixXd thetas;   ///< N x p
  Eigen::MatrixXd outputs;  ///< N x d
  Eigen::VectorXi iteration;

  Eigen::Index size() const { return thetas.rows(); }
};

Ensemble init_ensemble(const GaussianPrior& prior, int ensemble_size,
                       std::uint64_t seed);

struct EkiUpdateOptions {
  /// Perturbed-observation variant; disable for the deterministic-mean form.
  bool perturb_observations = true;
};

/// One perturbed-observation Kalman inversion step:
///   theta_j += C_tG (C_GG + noise_cov)^+ (y + eta_j - G(theta_j)),
/// with cross- and output covariances from member deviations and
/// eta_j ~ N(0, noise_cov). The solve uses a spectral pseudo-inverse so
/// rank-deficient sample noise covariances remain usable. Evaluations are
/// cleared on the returned ensemble.
Ensemble eki_update(const Ensemble& ens, const Eigen::VectorXd& y,
                    const CovarianceMatrix& noise_cov, std::uint64_t seed,
                    const EkiUpdateOptions& opt = {});

/// theta -> G(theta), with a per-call seed controlling the realization.
using ForwardEval =
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, std::uint64_t)>;

struct CalibrationConfig {
  int ensemble_size = 100;
  int n_iterations = 5;
  int parallelism = 1;
};

/// Ensemble Kalman inversion against data y with misfit weight `noise_cov`,
/// collecting every evaluated pair over all iterations. Member evaluations
/// within an iteration run concurrently; a failed evaluation is retried once
/// from a fresh prior draw, then rethrown.
TrainingSet run_calibration(const ForwardEval& eval, const GaussianPrior& prior,
                            const Eigen::VectorXd& y,
                            const CovarianceMatrix& noise_cov,
                            const CalibrationConfig& cfg, std::uint64_t seed);

/// ||y - g||^2 weighted by the inverse of `weight` (spectral pseudo-inverse).
double weighted_misfit_sq(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                          const CovarianceMatrix& weight);

}  // namespace tuq
