#include <doctest.h>

#include <cmath>

#include "support/linear_model.hpp"
#include "tuq/analytic_model.hpp"
#include "tuq/io.hpp"
#include "tuq/pipeline.hpp"
#include "tuq/rng.hpp"
#include "tuq/stats.hpp"

using namespace tuq;

namespace {

PipelineConfig fast_cfg() {
  PipelineConfig cfg;
  cfg.parallelism = 2;
  cfg.eki.ensemble_size = 30;
  cfg.eki.n_iterations = 3;
  cfg.gp.n_starts = 3;
  cfg.gp.opt_subset = 60;
  cfg.gp.max_train_points = 90;
  cfg.gp.opt_max_evals = 60;
  cfg.mcmc.n_samples = 7000;
  cfg.control.n_windows = 220;
  cfg.control.n_spinup = 20;
  return cfg;
}

/// Samples with exactly the identity empirical covariance.
Eigen::MatrixXd whitened_samples(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x = standard_normal(n, d, rng);
  x.rowwise() -= x.colwise().mean().eval();
  const Eigen::MatrixXd cov = estimate_covariance(x).matrix();
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  return l.triangularView<Eigen::Lower>()
      .solve(x.transpose())
      .transpose();
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("identity sample covariance gives unit utility") {
  PosteriorSampleSet ps;
  ps.samples = whitened_samples(2000, 2, 5);
  CHECK(log_d_utility(ps) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(d_utility(ps) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("degenerate sample sets report infinite utility") {
  PosteriorSampleSet ps;
  ps.samples = Eigen::MatrixXd::Constant(1500, 2, 0.3);
  CHECK(std::isinf(d_utility(ps)));
}

TEST_CASE("MCMC utility matches the conjugate determinant on a linear problem") {
  Eigen::MatrixXd a(2, 2);
  a << 1.4, 0.3,
       -0.2, 0.8;
  const GaussianPrior prior(Eigen::Vector2d::Zero(),
                            Eigen::Matrix2d::Identity());
  const Eigen::Matrix2d gamma = 0.2 * Eigen::Matrix2d::Identity();
  const Eigen::Vector2d y(0.5, -0.1);

  // Information matrix A^T Gamma^-1 A + C^-1 is the closed-form utility.
  const Eigen::Matrix2d info =
      a.transpose() * gamma.inverse() * a + Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d post_cov = info.inverse();
  const Eigen::Vector2d post_mean =
      post_cov * a.transpose() * gamma.inverse() * y;

  const LogDensity target = [&](const Eigen::VectorXd& t) {
    const Eigen::VectorXd r = y - a * t;
    return -0.5 * r.dot(gamma.inverse() * r) - 0.5 * t.squaredNorm();
  };
  McmcConfig mcfg;
  mcfg.n_samples = 30000;
  const PosteriorSampleSet ps =
      run_chain(target, post_mean, prior.sqrt(), mcfg, 41);
  CHECK(d_utility(ps) == doctest::Approx(info.determinant()).epsilon(0.15));
}

TEST_CASE("linear reparameterization scales utilities by det(B)^-2 and keeps the argmax") {
  Eigen::Matrix2d b;
  b << 2.0, 0.5,
       0.0, 1.5;
  std::vector<PosteriorSampleSet> sets(3);
  Rng rng(9);
  std::vector<double> u_before, u_after;
  for (int k = 0; k < 3; ++k) {
    sets[static_cast<std::size_t>(k)].samples =
        (1.0 + 0.4 * k) * standard_normal(3000, 2, rng);
    u_before.push_back(d_utility(sets[static_cast<std::size_t>(k)]));
    PosteriorSampleSet mapped;
    mapped.samples =
        sets[static_cast<std::size_t>(k)].samples * b.transpose();
    u_after.push_back(d_utility(mapped));
  }
  const double det_b = b.determinant();
  for (int k = 0; k < 3; ++k)
    CHECK(u_after[static_cast<std::size_t>(k)] ==
          doctest::Approx(u_before[static_cast<std::size_t>(k)] /
                          (det_b * det_b))
              .epsilon(1e-9));
  const auto argmax = [](const std::vector<double>& u) {
    return std::max_element(u.begin(), u.end()) - u.begin();
  };
  CHECK(argmax(u_before) == argmax(u_after));
}

TEST_CASE("design stage budget is control windows plus ensemble evaluations") {
  const AnalyticAquaplanet model;
  const GaussianPrior prior = build_prior();
  PipelineConfig cfg = fast_cfg();
  const DesignSpace ds = design_space_for(model, 3);
  const std::vector<Restriction> all = enumerate_designs(ds);

  for (const std::size_t n_designs : {std::size_t{1}, std::size_t{30}}) {
    const std::vector<Restriction> designs(all.begin(),
                                           all.begin() + n_designs);
    model.reset_eval_count();
    const DesignStageResult result =
        design_stage(model, prior, designs, cfg, 7, &ds);
    CHECK(result.forward_evals ==
          cfg.control.n_windows +
              cfg.eki.ensemble_size * cfg.eki.n_iterations);
    CHECK(result.table.rows.size() == n_designs);
    if (n_designs == 1) {
      CHECK(result.table.argmax == 0);
    }
  }
}

TEST_CASE("utility table rows are internally consistent") {
  const AnalyticAquaplanet model;
  const GaussianPrior prior = build_prior();
  PipelineConfig cfg = fast_cfg();
  const DesignSpace ds = design_space_for(model, 3);
  std::vector<Restriction> designs = enumerate_designs(ds);
  designs.resize(6);

  const DesignStageResult result =
      design_stage(model, prior, designs, cfg, 21, &ds);
  for (std::size_t i = 0; i < result.table.rows.size(); ++i) {
    const UtilityRow& r = result.table.rows[i];
    REQUIRE(r.ok);
    CHECK(r.log_utility + r.logdet_cov == doctest::Approx(0.0).epsilon(1e-10));
    // Retained chains are large enough and mixing sanely.
    CHECK(result.posteriors[i].size() >= 1000);
    CHECK(result.posteriors[i].acceptance_rate > 0.15);
    CHECK(result.posteriors[i].acceptance_rate < 0.45);
  }
}

TEST_CASE("per-design failures are recorded and excluded from the argmax") {
  const AnalyticAquaplanet model;
  const GaussianPrior prior = build_prior();
  PipelineConfig cfg = fast_cfg();
  const DesignSpace ds = design_space_for(model, 3);
  std::vector<Restriction> designs = enumerate_designs(ds);
  designs.resize(3);
  designs[1].rows = {10000};  // out of range: this design must fail alone

  const DesignStageResult result =
      design_stage(model, prior, designs, cfg, 3, nullptr);
  CHECK(result.table.rows[0].ok);
  CHECK_FALSE(result.table.rows[1].ok);
  CHECK(!result.table.rows[1].error.empty());
  CHECK(result.table.rows[2].ok);
  CHECK(result.table.argmax != 1);
}

TEST_CASE("design stage results are independent of the worker count") {
  const AnalyticAquaplanet model;
  const GaussianPrior prior = build_prior();
  const DesignSpace ds = design_space_for(model, 3);
  std::vector<Restriction> designs = enumerate_designs(ds);
  designs.resize(4);

  PipelineConfig serial = fast_cfg();
  serial.parallelism = 1;
  serial.mcmc.n_samples = 2000;
  PipelineConfig parallel = serial;
  parallel.parallelism = 2;

  const DesignStageResult a = design_stage(model, prior, designs, serial, 99, &ds);
  const DesignStageResult b =
      design_stage(model, prior, designs, parallel, 99, &ds);
  for (std::size_t i = 0; i < designs.size(); ++i) {
    CHECK(a.table.rows[i].log_utility == b.table.rows[i].log_utility);
    CHECK((a.posteriors[i].samples - b.posteriors[i].samples)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("emulator stays within 3 sigma of the restricted mean map") {
  const AnalyticAquaplanet model;
  const GaussianPrior prior = build_prior();
  PipelineConfig cfg = fast_cfg();
  const DesignSpace ds = design_space_for(model, 3);
  const Restriction w = enumerate_designs(ds)[15];

  // Stage-1 ingredients: control covariance, one data realization, EKI pairs.
  const Eigen::MatrixXd control =
      model.run_control(prior.mean, cfg.control.n_windows, cfg.control.n_spinup, 4);
  const CovarianceMatrix sigma = estimate_covariance(control);
  const Eigen::VectorXd y = control.row(0).transpose();
  CalibrationConfig eki_cfg = cfg.eki;
  eki_cfg.parallelism = 2;
  const ForwardEval eval = [&](const Eigen::VectorXd& theta, std::uint64_t s) {
    return model.eval_finite(theta, s);
  };
  const TrainingSet ts = run_calibration(
      eval, prior, y, CovarianceMatrix(2.0 * sigma.matrix()), eki_cfg, 4);

  const Decorrelator dec =
      fit_decorrelator(CovarianceMatrix(restrict_matrix(w, sigma.matrix())));
  GpTrainConfig gp_cfg = cfg.gp;
  const GpEmulator em = train(
      ts.thetas, dec.whiten_rows(restrict_columns(w, ts.outputs)), dec, gp_cfg);

  // 50 draws from the central 90% prior region (chi^2_2 <= 4.605).
  Rng rng(61);
  const Eigen::MatrixXd sqrt_cov = prior.sqrt();
  int cases = 0, covered = 0;
  while (cases < 50 * em.output_dim()) {
    const Eigen::VectorXd xi = standard_normal(2, rng);
    if (xi.squaredNorm() > 4.605) continue;
    const Eigen::VectorXd theta = prior.mean + sqrt_cov * xi;
    const Eigen::VectorXd truth =
        dec.whiten(restrict_vector(w, model.eval_mean(theta)));
    Eigen::VectorXd mean, var;
    em.predict(theta, mean, var);
    for (Eigen::Index d = 0; d < truth.size(); ++d) {
      ++cases;
      if (std::abs(mean[d] - truth[d]) <= 3.0 * std::sqrt(var[d])) ++covered;
    }
  }
  CHECK(static_cast<double>(covered) / cases >= 0.95);
}

TEST_CASE("uq stage recovers the truth at an equatorial design") {
  const AnalyticAquaplanet model;
  const GaussianPrior prior = build_prior();
  PipelineConfig cfg = fast_cfg();
  const DesignSpace ds = design_space_for(model, 3);
  const Restriction w = enumerate_designs(ds)[15];  // centered at +2.8 deg
  const Eigen::Vector2d theta_dagger =
      transform_forward(PhysicalParams{0.7, 7200.0}).theta;

  const UqResult result = uq_stage(model, w, theta_dagger, prior, cfg, 1234);
  CHECK(result.samples.size() >= 1000);
  CHECK(hdr_contains(result.samples.samples, theta_dagger, 0.99));
  // Strictly more concentrated than the prior.
  CHECK(result.logdet_cov < std::log(prior.cov.determinant()));
  CHECK(result.replicate_cov_rel_diff >= 0.0);
  CHECK(result.replicate_cov_rel_diff < 1.0);
  CHECK(result.z.size() == 9);
}

TEST_CASE("full-vector design with tiny noise concentrates the posterior") {
  AnalyticConfig acfg;
  acfg.noise_marginal_frac = 0.002;
  const AnalyticAquaplanet model(acfg);
  const GaussianPrior prior = build_prior();
  PipelineConfig cfg = fast_cfg();
  cfg.noise.c_max = 1e-5;
  cfg.noise.c = 1e-5;
  const Restriction full = full_restriction(model.output_dim());
  const Eigen::Vector2d theta_dagger =
      transform_forward(PhysicalParams{0.7, 7200.0}).theta;

  const UqResult result = uq_stage(model, full, theta_dagger, prior, cfg, 8);
  const double prior_logdet = std::log(prior.cov.determinant());
  CHECK(result.logdet_cov < prior_logdet - std::log(1000.0));
}

}  // TEST_SUITE
