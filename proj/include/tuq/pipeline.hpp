#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tuq/config.hpp"
#include "tuq/design_space.hpp"
#include "tuq/eki.hpp"
#include "tuq/forward_model.hpp"
#include "tuq/mcmc.hpp"
#include "tuq/oracle.hpp"

namespace tuq {

struct UtilityRow {
  DesignId id;
  double latitude_deg = 0.0;
  double log_utility = 0.0;
  double logdet_cov = 0.0;
  bool ok = false;
  std::string error;
};

/// Per-design log D-utilities with the argmax row; log U = -log det(posterior
/// covariance). Failed or degenerate designs carry ok = false and are
/// excluded from the argmax.
struct UtilityTable {
  std::vector<UtilityRow> rows;
  int argmax = -1;  ///< index into rows, -1 if no valid design

  const UtilityRow& best() const;
};

/// U(W_k) = 1/det(Cov(samples)); +inf for a singular (degenerate) covariance.
double d_utility(const PosteriorSampleSet& ps);
double log_d_utility(const PosteriorSampleSet& ps);
double log_d_utility(const CovarianceMatrix& cov);

struct DesignStageResult {
  UtilityTable table;
  std::vector<PosteriorSampleSet> posteriors;  ///< parallel to table.rows
  Eigen::VectorXd data;                        ///< the y realization used
  Eigen::MatrixXd sigma;                       ///< estimated Sigma(theta*)
  TrainingSet training;
  long forward_evals = 0;  ///< model evaluations consumed by this stage
};

/// Stage 1: one control run and one calibration at the prior mean, then an
/// independent extract/emulate/sample pass per design (run concurrently),
/// ranked by log D-utility. Forward-model cost is control windows plus
/// ensemble_size * n_iterations, independent of the number of designs.
DesignStageResult design_stage(const ForwardModel& model,
                               const GaussianPrior& prior,
                               const std::vector<Restriction>& designs,
                               const PipelineConfig& cfg, std::uint64_t seed,
                               const DesignSpace* ds = nullptr);

DesignStageResult design_stage(const ForwardModel& model,
                               const GaussianPrior& prior,
                               const DesignSpace& ds,
                               const PipelineConfig& cfg, std::uint64_t seed);

struct UqResult {
  PosteriorSampleSet samples;
  Eigen::MatrixXd posterior_covariance;
  double logdet_cov = 0.0;
  double log_utility = 0.0;
  Eigen::VectorXd z;  ///< restricted synthetic observation
  GpEmulator emulator;
  /// Relative Frobenius disagreement between replicate-chain covariances;
  /// large values indicate poor mixing (e.g. multimodal posteriors).
  double replicate_cov_rel_diff = 0.0;
};

/// Stage 2: full uncertainty quantification at one design. Synthetic data
/// z_k = W_k G_T(theta_dagger) + delta with delta from the capped
/// proportional noise model; calibration, whitening by W(Sigma + Delta)W^T,
/// emulation (with the observation-noise share added to the predictive
/// variance) and sampling are rerun against z_k.
UqResult uq_stage(const ForwardModel& model, const Restriction& design,
                  const Eigen::VectorXd& theta_dagger,
                  const GaussianPrior& prior, const PipelineConfig& cfg,
                  std::uint64_t seed);

/// Grid-quadrature reference ranking over the same designs, solving each
/// restricted inverse problem exactly with the model's closed-form mean map.
UtilityTable oracle_utility_table(const ForwardModel& model,
                                  const std::vector<Restriction>& designs,
                                  const Eigen::VectorXd& y,
                                  const CovarianceMatrix& sigma,
                                  const GaussianPrior& prior,
                                  const GridConfig& grid, int parallelism,
                                  const DesignSpace* ds = nullptr);

/// Convenience wrapper deriving y and Sigma(theta*) from a control run with
/// the same seed discipline as design_stage, so the two tables answer the
/// same inverse problems.
UtilityTable oracle_utility_table(const ForwardModel& model,
                                  const DesignSpace& ds,
                                  const GaussianPrior& prior,
                                  const PipelineConfig& cfg,
                                  std::uint64_t seed);

}  // namespace tuq
