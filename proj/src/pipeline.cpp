#include "tuq/pipeline.hpp"

#include <cmath>
#include <limits>

#include "tuq/decorrelator.hpp"
#include "tuq/parallel.hpp"
#include "tuq/rng.hpp"

namespace tuq {

namespace {

double logdet_spd(const Eigen::MatrixXd& m) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    return std::numeric_limits<double>::quiet_NaN();
  double ld = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    ld += 2.0 * std::log(llt.matrixLLT()(i, i));
  return ld;
}

/// Training point with the highest emulated posterior density; used to start
/// the chain close to the mode.
Eigen::VectorXd best_start(const TrainingSet& ts, const GpEmulator& em,
                           const Eigen::VectorXd& data,
                           const GaussianPrior& prior) {
  double best = -std::numeric_limits<double>::infinity();
  Eigen::Index best_row = 0;
  for (Eigen::Index i = 0; i < ts.size(); ++i) {
    const double lp = log_posterior(ts.thetas.row(i).transpose(), data, em, prior);
    if (lp > best) {
      best = lp;
      best_row = i;
    }
  }
  if (!std::isfinite(best))
    throw std::runtime_error("pipeline: no usable chain start point");
  return ts.thetas.row(best_row).transpose();
}

/// Extract-emulate-sample for one design against data vector y_full and
/// whitening covariance S_white (restricted); returns the sample set.
PosteriorSampleSet emulate_and_sample(
    const Restriction& w, const TrainingSet& ts, const Eigen::VectorXd& y_full,
    const Eigen::MatrixXd& s_white_restricted,
    const Eigen::VectorXd& extra_noise_diag_restricted,
    const GaussianPrior& prior, const PipelineConfig& cfg,
    std::uint64_t seed) {
  const Decorrelator dec =
      fit_decorrelator(CovarianceMatrix(s_white_restricted));

  const Eigen::MatrixXd outputs_w =
      dec.whiten_rows(restrict_columns(w, ts.outputs));
  Eigen::VectorXd extra;
  if (extra_noise_diag_restricted.size() > 0)
    extra = dec
                .whiten_cov(Eigen::MatrixXd(
                    extra_noise_diag_restricted.asDiagonal()))
                .diagonal();

  GpTrainConfig gp_cfg = cfg.gp;
  gp_cfg.seed = derive_seed(seed, {stream::kGp});
  const GpEmulator em =
      train(ts.thetas, outputs_w, dec, gp_cfg, extra, w.id.label());

  const Eigen::VectorXd data = dec.whiten(restrict_vector(w, y_full));
  const Eigen::VectorXd start = best_start(ts, em, data, prior);
  return run_chain(em, data, prior, start, cfg.mcmc,
                   derive_seed(seed, {stream::kMcmc}));
}

}  // namespace

const UtilityRow& UtilityTable::best() const {
  if (argmax < 0 || argmax >= static_cast<int>(rows.size()))
    throw std::runtime_error("UtilityTable: no valid argmax row");
  return rows[static_cast<std::size_t>(argmax)];
}

double log_d_utility(const CovarianceMatrix& cov) {
  const double ld = logdet_spd(cov.matrix());
  if (!std::isfinite(ld)) return std::numeric_limits<double>::infinity();
  return -ld;
}

double log_d_utility(const PosteriorSampleSet& ps) {
  return log_d_utility(posterior_cov(ps));
}

double d_utility(const PosteriorSampleSet& ps) {
  return std::exp(log_d_utility(ps));
}

namespace {

void fill_argmax(UtilityTable& table) {
  table.argmax = -1;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const UtilityRow& r = table.rows[i];
    // Ties broken by enumeration order (lowest design index).
    if (r.ok && std::isfinite(r.log_utility) && r.log_utility > best) {
      best = r.log_utility;
      table.argmax = static_cast<int>(i);
    }
  }
}

}  // namespace

DesignStageResult design_stage(const ForwardModel& model,
                               const GaussianPrior& prior,
                               const std::vector<Restriction>& designs,
                               const PipelineConfig& cfg, std::uint64_t seed,
                               const DesignSpace* ds) {
  if (designs.empty())
    throw std::invalid_argument("design_stage: no designs given");
  const long evals_before = model.eval_count();

  // (a) Control run at the prior mean: the internal-variability estimate and
  // one window realization serving as the data y.
  const Eigen::VectorXd theta_star = prior.mean;
  const Eigen::MatrixXd control =
      model.run_control(theta_star, cfg.control.n_windows, cfg.control.n_spinup,
                        derive_seed(seed, {stream::kControl}));
  const CovarianceMatrix sigma = estimate_covariance(control);
  const Eigen::VectorXd y = control.row(0).transpose();

  // (b) One calibration against the full data with misfit weight 2*Sigma.
  const CovarianceMatrix eki_weight(2.0 * sigma.matrix());
  CalibrationConfig eki_cfg = cfg.eki;
  eki_cfg.parallelism = cfg.parallelism;
  const ForwardEval eval = [&](const Eigen::VectorXd& theta,
                               std::uint64_t s) {
    return model.eval_finite(theta, s);
  };
  const TrainingSet ts = run_calibration(eval, prior, y, eki_weight, eki_cfg,
                                         derive_seed(seed, {stream::kEki}));

  // (c) Extract, emulate and sample per design, concurrently.
  DesignStageResult result;
  result.data = y;
  result.sigma = sigma.matrix();
  result.training = ts;
  result.table.rows.resize(designs.size());
  result.posteriors.resize(designs.size());

  parallel_for(
      static_cast<long>(designs.size()),
      [&](long i) {
        const Restriction& w = designs[static_cast<std::size_t>(i)];
        UtilityRow& row = result.table.rows[static_cast<std::size_t>(i)];
        row.id = w.id;
        row.latitude_deg =
            ds ? design_center_latitude(*ds, w)
               : std::numeric_limits<double>::quiet_NaN();
        try {
          const Eigen::MatrixXd s_k = restrict_matrix(w, sigma.matrix());
          PosteriorSampleSet ps = emulate_and_sample(
              w, ts, y, s_k, Eigen::VectorXd(), prior, cfg,
              derive_seed(seed, {stream::kDesign,
                                 static_cast<std::uint64_t>(w.id.flat)}));
          const CovarianceMatrix cov = posterior_cov(ps);
          row.logdet_cov = logdet_spd(cov.matrix());
          row.log_utility = -row.logdet_cov;
          row.ok = std::isfinite(row.log_utility);
          if (!row.ok) row.error = "degenerate posterior covariance";
          result.posteriors[static_cast<std::size_t>(i)] = std::move(ps);
        } catch (const std::exception& e) {
          row.ok = false;
          row.error = e.what();
          row.log_utility = std::numeric_limits<double>::quiet_NaN();
          row.logdet_cov = std::numeric_limits<double>::quiet_NaN();
        }
      },
      cfg.parallelism);

  // (d) Argmax design.
  fill_argmax(result.table);
  result.forward_evals = model.eval_count() - evals_before;
  return result;
}

DesignStageResult design_stage(const ForwardModel& model,
                               const GaussianPrior& prior,
                               const DesignSpace& ds,
                               const PipelineConfig& cfg, std::uint64_t seed) {
  if (ds.full_dim() != model.output_dim() || ds.mode != model.mode())
    throw std::invalid_argument("design_stage: design space does not match model");
  return design_stage(model, prior, enumerate_designs(ds), cfg, seed, &ds);
}

UqResult uq_stage(const ForwardModel& model, const Restriction& design,
                  const Eigen::VectorXd& theta_dagger,
                  const GaussianPrior& prior, const PipelineConfig& cfg,
                  std::uint64_t seed) {
  // Control run at the truth: internal variability and row means for the
  // synthetic-noise model.
  const Eigen::MatrixXd control =
      model.run_control(theta_dagger, cfg.control.n_windows,
                        cfg.control.n_spinup,
                        derive_seed(seed, {stream::kControl, 1}));
  const CovarianceMatrix sigma = estimate_covariance(control);
  const Eigen::VectorXd mu = control.colwise().mean().transpose();
  const NoiseModel obs_noise = build_obs_noise(mu, sigma, model.row_bounds(),
                                               cfg.noise.c, cfg.noise.c_max);

  // Synthetic observation z_k = W_k G_T(theta_dagger) + delta.
  const Eigen::VectorXd z_clean = restrict_vector(
      design, model.eval_finite(theta_dagger, derive_seed(seed, {stream::kData})));
  const NoiseModel noise_k = obs_noise.restricted(design);
  Rng noise_rng(derive_seed(seed, {stream::kNoise}));
  const Eigen::VectorXd z =
      z_clean + noise_k.d.cwiseProduct(standard_normal(z_clean.size(), noise_rng));

  // Calibrate against z_k with weight W(2*Sigma + Delta)W^T.
  const Eigen::MatrixXd s_k = restrict_matrix(design, sigma.matrix());
  const Eigen::MatrixXd delta_k = noise_k.variances().asDiagonal();
  const CovarianceMatrix eki_weight(2.0 * s_k + delta_k);
  CalibrationConfig eki_cfg = cfg.eki;
  eki_cfg.parallelism = cfg.parallelism;
  const ForwardEval eval = [&](const Eigen::VectorXd& theta, std::uint64_t s) {
    return restrict_vector(design, model.eval_finite(theta, s));
  };
  TrainingSet ts = run_calibration(eval, prior, z, eki_weight, eki_cfg,
                                   derive_seed(seed, {stream::kEki, 1}));

  // Emulate/sample with whitening by W(Sigma + Delta)W^T; the observation
  // noise share is carried into the predictive variance, since the training
  // outputs only contain internal variability.
  const Eigen::MatrixXd s_white = s_k + delta_k;
  const Decorrelator dec = fit_decorrelator(CovarianceMatrix(s_white));
  const Eigen::MatrixXd outputs_w = dec.whiten_rows(ts.outputs);
  const Eigen::VectorXd extra = dec.whiten_cov(delta_k).diagonal();

  GpTrainConfig gp_cfg = cfg.gp;
  gp_cfg.seed = derive_seed(seed, {stream::kGp, 1});
  const GpEmulator em =
      train(ts.thetas, outputs_w, dec, gp_cfg, extra, design.id.label());

  const Eigen::VectorXd data = dec.whiten(z);
  const Eigen::VectorXd start = best_start(ts, em, data, prior);

  UqResult result;
  result.z = z;
  result.emulator = em;
  result.samples = run_chain(em, data, prior, start, cfg.mcmc,
                             derive_seed(seed, {stream::kMcmc, 1, 0}));
  const CovarianceMatrix cov = posterior_cov(result.samples);
  result.posterior_covariance = cov.matrix();
  result.logdet_cov = logdet_spd(cov.matrix());
  result.log_utility = -result.logdet_cov;

  // Replicate chains as a mixing diagnostic (multimodal posteriors show up
  // as covariance disagreement between replicates).
  double max_rel_diff = 0.0;
  for (int r = 1; r < cfg.uq_replicates; ++r) {
    const PosteriorSampleSet rep =
        run_chain(em, data, prior, start, cfg.mcmc,
                  derive_seed(seed, {stream::kMcmc, 1,
                                     static_cast<std::uint64_t>(r)}));
    const Eigen::MatrixXd rep_cov = posterior_cov(rep).matrix();
    max_rel_diff =
        std::max(max_rel_diff, (rep_cov - cov.matrix()).norm() /
                                   std::max(cov.matrix().norm(), 1e-300));
  }
  result.replicate_cov_rel_diff = max_rel_diff;
  return result;
}

UtilityTable oracle_utility_table(const ForwardModel& model,
                                  const std::vector<Restriction>& designs,
                                  const Eigen::VectorXd& y,
                                  const CovarianceMatrix& sigma,
                                  const GaussianPrior& prior,
                                  const GridConfig& grid, int parallelism,
                                  const DesignSpace* ds) {
  if (!model.has_mean())
    throw std::invalid_argument(
        "oracle_utility_table: model has no closed-form mean map");

  UtilityTable table;
  table.rows.resize(designs.size());
  parallel_for(
      static_cast<long>(designs.size()),
      [&](long i) {
        const Restriction& w = designs[static_cast<std::size_t>(i)];
        UtilityRow& row = table.rows[static_cast<std::size_t>(i)];
        row.id = w.id;
        row.latitude_deg =
            ds ? design_center_latitude(*ds, w)
               : std::numeric_limits<double>::quiet_NaN();
        try {
          const MeanMap mean_map = [&](const Eigen::VectorXd& theta) {
            return restrict_vector(w, model.eval_mean(theta));
          };
          const GridPosterior gp = grid_posterior(
              mean_map, restrict_vector(w, y),
              CovarianceMatrix(restrict_matrix(w, sigma.matrix())), prior,
              grid);
          row.logdet_cov = gp.logdet_cov;
          row.log_utility = -gp.logdet_cov;
          row.ok = std::isfinite(row.log_utility);
        } catch (const std::exception& e) {
          row.ok = false;
          row.error = e.what();
          row.log_utility = std::numeric_limits<double>::quiet_NaN();
          row.logdet_cov = std::numeric_limits<double>::quiet_NaN();
        }
      },
      parallelism);
  fill_argmax(table);
  return table;
}

UtilityTable oracle_utility_table(const ForwardModel& model,
                                  const DesignSpace& ds,
                                  const GaussianPrior& prior,
                                  const PipelineConfig& cfg,
                                  std::uint64_t seed) {
  const Eigen::MatrixXd control =
      model.run_control(prior.mean, cfg.control.n_windows, cfg.control.n_spinup,
                        derive_seed(seed, {stream::kControl}));
  const CovarianceMatrix sigma = estimate_covariance(control);
  const Eigen::VectorXd y = control.row(0).transpose();
  return oracle_utility_table(model, enumerate_designs(ds), y, sigma, prior,
                              GridConfig{}, cfg.parallelism, &ds);
}

}  // namespace tuq
