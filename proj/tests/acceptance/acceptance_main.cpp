// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Criterion 1 runs the full default configuration; the
// statistical criteria use lighter sampler settings where the tolerance
// statement does not pin them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "support/linear_model.hpp"
#include "tuq/analytic_model.hpp"
#include "tuq/commands.hpp"
#include "tuq/config.hpp"
#include "tuq/io.hpp"
#include "tuq/oracle.hpp"
#include "tuq/parallel.hpp"
#include "tuq/pipeline.hpp"
#include "tuq/rng.hpp"
#include "tuq/stats.hpp"

using namespace tuq;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL",
              criterion, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

/// Sampler settings for the statistical criteria (tolerances do not pin the
/// chain length; keep >= 1000 retained samples).
PipelineConfig light_cfg() {
  PipelineConfig cfg;
  cfg.parallelism = 0;
  cfg.eki.ensemble_size = 60;
  cfg.eki.n_iterations = 4;
  cfg.gp.n_starts = 4;
  cfg.gp.opt_subset = 120;
  cfg.gp.max_train_points = 160;
  cfg.gp.opt_max_evals = 90;
  cfg.mcmc.n_samples = 20000;
  cfg.uq_replicates = 1;
  return cfg;
}

Eigen::Vector2d theta_truth() {
  return transform_forward(PhysicalParams{0.7, 7200.0}).theta;
}

// Shared stage-1 run at the default configuration (criterion 1), reused by
// criteria 3 and 4 for design selection.
struct Stage1 {
  PipelineConfig cfg;
  DesignSpace ds;
  DesignStageResult result;
  UtilityTable oracle;
  double seconds = 0.0;
};

Stage1 run_stage1_default() {
  Stage1 s;
  s.cfg = default_config();
  s.cfg.parallelism = 0;

  const AnalyticAquaplanet model;
  const GaussianPrior prior = build_prior(s.cfg.prior);
  s.ds = design_space_for(model, s.cfg.stencil);

  const auto t0 = std::chrono::steady_clock::now();
  s.result = design_stage(model, prior, s.ds, s.cfg, s.cfg.seed);
  s.oracle = oracle_utility_table(
      model, enumerate_designs(s.ds), s.result.data,
      CovarianceMatrix(s.result.sigma), prior, GridConfig{},
      s.cfg.parallelism, &s.ds);
  s.seconds = std::chrono::duration<double>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
  return s;
}

void criterion1(const Stage1& s) {
  std::vector<double> lu_pipe, lu_oracle;
  for (std::size_t i = 0; i < s.result.table.rows.size(); ++i)
    if (s.result.table.rows[i].ok && s.oracle.rows[i].ok) {
      lu_pipe.push_back(s.result.table.rows[i].log_utility);
      lu_oracle.push_back(s.oracle.rows[i].log_utility);
    }
  const double rho = spearman_rank_correlation(lu_pipe, lu_oracle);

  const int top_pipe = s.result.table.best().id.lat_start;
  const int top_oracle = s.oracle.best().id.lat_start;
  const bool adjacent = std::abs(top_pipe - top_oracle) <= 1;
  const bool in_time = s.seconds <= 600.0;

  char detail[256];
  std::snprintf(detail, sizeof(detail),
                "rho=%.3f (>=0.8), top-1 pipeline k=%d vs oracle k=%d, "
                "runtime %.0fs (<=600s)",
                rho, top_pipe, top_oracle, s.seconds);
  report(1, "oracle ranking agreement", rho >= 0.8 && adjacent && in_time,
         detail);
}

void criterion2() {
  Eigen::MatrixXd a(2, 2);
  a << 1.3, 0.4,
       -0.5, 1.1;
  const Eigen::Matrix2d gamma = 0.3 * Eigen::Matrix2d::Identity();
  const GaussianPrior prior(Eigen::Vector2d::Zero(),
                            Eigen::Matrix2d::Identity());

  // The linear model is free to evaluate, so the incidental estimation
  // errors (sample covariance of the noise, learned nugget) are driven well
  // below the 15% tolerance by longer control runs and training sets.
  PipelineConfig cfg = light_cfg();
  cfg.control.n_windows = 5050;
  cfg.control.n_spinup = 50;
  cfg.eki.ensemble_size = 100;
  cfg.eki.n_iterations = 5;
  cfg.gp.n_starts = 4;
  cfg.gp.max_train_points = 400;
  cfg.gp.opt_subset = 400;
  cfg.gp.opt_max_evals = 120;
  cfg.mcmc.n_samples = 40000;
  cfg.mcmc.thinning = 2;

  int cov_ok = 0, util_ok = 0;
  const Eigen::Matrix2d info =
      a.transpose() * gamma.inverse() * a + Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d conjugate_cov = info.inverse();

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const testing::LinearModel model(a, gamma);
    const std::vector<Restriction> full{full_restriction(2)};
    const DesignStageResult r =
        design_stage(model, prior, full, cfg, seed, nullptr);
    if (!r.table.rows[0].ok) continue;
    const Eigen::MatrixXd pipe_cov =
        posterior_cov(r.posteriors[0]).matrix();
    if ((pipe_cov - conjugate_cov).norm() / conjugate_cov.norm() < 0.15)
      ++cov_ok;
    const double u = d_utility(r.posteriors[0]);
    if (std::abs(u - info.determinant()) / info.determinant() < 0.15)
      ++util_ok;
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "covariance within 15%%: %d/5 seeds, utility within 15%%: "
                "%d/5 seeds",
                cov_ok, util_ok);
  report(2, "linear-Gaussian end-to-end", cov_ok == 5 && util_ok == 5, detail);
}

void criterion3(const Stage1& s) {
  const AnalyticAquaplanet model;
  const GaussianPrior prior = build_prior();
  const std::vector<Restriction> designs = enumerate_designs(s.ds);
  const Restriction& best =
      designs[static_cast<std::size_t>(s.result.table.argmax)];
  const PipelineConfig cfg = light_cfg();
  const Eigen::Vector2d dagger = theta_truth();

  std::vector<int> hits(20, 0);
  parallel_for(
      20,
      [&](long i) {
        PipelineConfig local = cfg;
        local.parallelism = 1;
        const UqResult r = uq_stage(model, best, dagger, prior, local,
                                    derive_seed(4242, {static_cast<std::uint64_t>(i)}));
        hits[static_cast<std::size_t>(i)] =
            hdr_contains(r.samples.samples, dagger, 0.99) ? 1 : 0;
      },
      0);
  int total = 0;
  for (int h : hits) total += h;
  char detail[120];
  std::snprintf(detail, sizeof(detail), "truth inside 99%% HDR in %d/20 replicates (need >=19)",
                total);
  report(3, "truth recovery at the argmax design", total >= 19, detail);
}

void criterion4(const Stage1& s) {
  const AnalyticAquaplanet model;
  const GaussianPrior prior = build_prior();
  const std::vector<Restriction> designs = enumerate_designs(s.ds);
  const PipelineConfig cfg = light_cfg();
  const Eigen::Vector2d dagger = theta_truth();

  // Five designs of decreasing stage-1 utility give four adjacent pairs.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < s.result.table.rows.size(); ++i)
    if (s.result.table.rows[i].ok) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.result.table.rows[a].log_utility >
           s.result.table.rows[b].log_utility;
  });
  const std::vector<std::size_t> picks{order[0], order[4], order[10],
                                       order[18], order[26]};

  int seeds_ok = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::vector<double> logdets(picks.size());
    parallel_for(
        static_cast<long>(picks.size()),
        [&](long i) {
          PipelineConfig local = cfg;
          local.parallelism = 1;
          const UqResult r =
              uq_stage(model, designs[picks[static_cast<std::size_t>(i)]],
                       dagger, prior, local,
                       derive_seed(seed, {0xC4, static_cast<std::uint64_t>(i)}));
          logdets[static_cast<std::size_t>(i)] = r.logdet_cov;
        },
        0);
    int non_decreasing = 0;
    for (std::size_t i = 0; i + 1 < logdets.size(); ++i)
      if (logdets[i + 1] >= logdets[i] - 1e-12) ++non_decreasing;
    if (non_decreasing >= 3) ++seeds_ok;
  }
  char detail[120];
  std::snprintf(detail, sizeof(detail),
                "monotone in >=3/4 adjacent pairs for %d/5 seeds (need >=4)",
                seeds_ok);
  report(4, "stage-2 utility monotonicity", seeds_ok >= 4, detail);
}

void criterion5() {
  PipelineConfig cfg = default_seasonal_config();
  cfg.parallelism = 0;
  cfg.eki.ensemble_size = 60;
  cfg.eki.n_iterations = 4;
  cfg.gp.n_starts = 3;
  cfg.gp.opt_subset = 100;
  cfg.gp.max_train_points = 140;
  cfg.gp.opt_max_evals = 70;
  cfg.mcmc.n_samples = 10000;

  const GaussianPrior prior = build_prior(cfg.prior);
  int seeds_ok = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto model = make_model(cfg.model);
    const DesignSpace ds = design_space_for(*model, cfg.stencil);
    const DesignStageResult r = design_stage(*model, prior, ds, cfg, seed);

    double best_winter = -1e300, lat_winter = 0.0;
    double best_summer = -1e300, lat_summer = 0.0;
    for (const UtilityRow& row : r.table.rows) {
      if (!row.ok) continue;
      if (row.id.season == 3 && row.log_utility > best_winter) {
        best_winter = row.log_utility;
        lat_winter = row.latitude_deg;
      }
      if (row.id.season == 1 && row.log_utility > best_summer) {
        best_summer = row.log_utility;
        lat_summer = row.latitude_deg;
      }
    }
    if (lat_winter < 0.0 && lat_summer > 0.0) ++seeds_ok;
  }
  char detail[120];
  std::snprintf(detail, sizeof(detail),
                "winter argmax < 0 and summer argmax > 0 in %d/5 seeds (need >=4)",
                seeds_ok);
  report(5, "seasonal ITCZ structure", seeds_ok >= 4, detail);
}

void criterion6() {
  // Budget: evaluations = control windows + J * n_iter for |D| in {1,30,128}.
  PipelineConfig cfg;
  cfg.parallelism = 0;
  cfg.eki.ensemble_size = 25;
  cfg.eki.n_iterations = 3;
  cfg.gp.n_starts = 2;
  cfg.gp.opt_subset = 50;
  cfg.gp.max_train_points = 75;
  cfg.gp.opt_max_evals = 40;
  cfg.mcmc.n_samples = 1300;
  cfg.mcmc.burn_fraction = 0.23;
  cfg.mcmc.thinning = 1;
  cfg.control.n_windows = 160;
  cfg.control.n_spinup = 10;
  cfg.uq_replicates = 1;
  const long expected =
      cfg.control.n_windows + cfg.eki.ensemble_size * cfg.eki.n_iterations;

  const GaussianPrior prior = build_prior();
  bool all_ok = true;
  std::string detail;
  for (const int n_designs : {1, 30, 128}) {
    PipelineConfig local = cfg;
    std::unique_ptr<ForwardModel> model;
    DesignSpace ds;
    if (n_designs == 128) {
      local.model.mode = SeasonMode::kSeasonal;
      local.model.window_days = 90.0;
      local.stencil = 1;
      local.control.n_windows = 60;
      local.control.n_spinup = 4;
      model = make_model(local.model);
      ds = design_space_for(*model, local.stencil);
    } else {
      model = make_model(local.model);
      ds = design_space_for(*model, local.stencil);
    }
    std::vector<Restriction> designs = enumerate_designs(ds);
    designs.resize(static_cast<std::size_t>(n_designs));
    model->reset_eval_count();
    const DesignStageResult r =
        design_stage(*model, prior, designs, local, 11, &ds);
    const long want = local.control.n_windows +
                      local.eki.ensemble_size * local.eki.n_iterations;
    if (r.forward_evals != want) all_ok = false;
    detail += "|D|=" + std::to_string(n_designs) + ": " +
              std::to_string(r.forward_evals) + "/" + std::to_string(want) +
              " ";
  }
  (void)expected;
  report(6, "forward-evaluation budget invariant", all_ok, detail);
}

void criterion7() {
  using clock = std::chrono::steady_clock;
  bool all_ok = true;
  std::string detail;

  auto timed = [&](const std::string& name,
                   const std::function<bool()>& part) {
    const auto t0 = clock::now();
    const bool ok = part();
    const double sec =
        std::chrono::duration<double>(clock::now() - t0).count();
    if (!ok || sec > 60.0) all_ok = false;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s %s %.1fs; ", name.c_str(),
                  ok ? "ok" : "FAILED", sec);
    detail += buf;
  };

  timed("eki-kalman", [] {
    Eigen::MatrixXd a(3, 2);
    a << 1.0, 0.4, -0.3, 1.2, 0.5, 0.5;
    const GaussianPrior prior(Eigen::Vector2d::Zero(),
                              Eigen::Matrix2d::Identity());
    const Eigen::MatrixXd gamma = 0.25 * Eigen::MatrixXd::Identity(3, 3);
    const Eigen::Vector3d y(1.0, -0.5, 0.3);
    const int j = 10000;
    Ensemble ens = init_ensemble(prior, j, 99);
    ens.evals.resize(j, 3);
    for (int i = 0; i < j; ++i)
      ens.evals.row(i) = (a * ens.members.row(i).transpose()).transpose();
    ens.has_evals = true;
    EkiUpdateOptions opt;
    opt.perturb_observations = false;
    const Ensemble updated =
        eki_update(ens, y, CovarianceMatrix(gamma), 1, opt);
    const Eigen::Vector2d prior_mean =
        ens.members.colwise().mean().transpose();
    const Eigen::MatrixXd k =
        a.transpose() * (a * a.transpose() + gamma)
                            .ldlt()
                            .solve(Eigen::MatrixXd::Identity(3, 3));
    const Eigen::Vector2d expected = prior_mean + k * (y - a * prior_mean);
    const Eigen::Vector2d got = updated.members.colwise().mean().transpose();
    return (got - expected).norm() / expected.norm() < 0.02;
  });

  timed("gp-sine", [] {
    Rng rng(44);
    std::uniform_real_distribution<double> ux(-3.0, 3.0);
    std::normal_distribution<double> noise(0.0, 0.1);
    Eigen::MatrixXd x(40, 1), y(40, 1);
    for (int i = 0; i < 40; ++i) {
      x(i, 0) = ux(rng);
      y(i, 0) = std::sin(x(i, 0)) + noise(rng);
    }
    const Decorrelator dec = fit_decorrelator(
        CovarianceMatrix(Eigen::MatrixXd::Identity(1, 1)));
    const GpEmulator em = train(x, y, dec);
    double sq = 0.0;
    const int m = 200;
    for (int i = 0; i < m; ++i) {
      const double xi = -3.0 + 6.0 * i / (m - 1);
      Eigen::VectorXd mean, var;
      em.predict(Eigen::VectorXd::Constant(1, xi), mean, var);
      sq += (mean[0] - std::sin(xi)) * (mean[0] - std::sin(xi));
    }
    return std::sqrt(sq / m) < 0.05;
  });

  timed("mcmc-gaussian", [] {
    const LogDensity target = [](const Eigen::VectorXd& t) {
      return -0.5 * t.squaredNorm();
    };
    McmcConfig cfg;
    cfg.n_samples = 135000;  // ~20k retained after burn-in and thinning
    const PosteriorSampleSet ps = run_chain(
        target, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), cfg, 31);
    const Eigen::MatrixXd cov = posterior_cov(ps).matrix();
    return ps.samples.colwise().mean().cwiseAbs().maxCoeff() < 0.05 &&
           (cov - Eigen::Matrix2d::Identity()).norm() / std::sqrt(2.0) < 0.10;
  });

  timed("noise-hand-case", [] {
    Eigen::VectorXd mu(1);
    mu << 0.95;
    Eigen::MatrixXd s(1, 1);
    s << 0.0004;
    const NoiseModel nm = build_obs_noise(mu, CovarianceMatrix(s),
                                          {Interval{0.0, 1.0}}, 0.2, 0.1);
    return std::abs(nm.d[0] - 0.002) < 1e-15;
  });

  timed("d-utility-affine", [] {
    Eigen::Matrix2d b;
    b << 2.0, 0.5, 0.0, 1.5;
    Rng rng(9);
    std::vector<double> before, after;
    for (int k = 0; k < 4; ++k) {
      PosteriorSampleSet ps;
      ps.samples = (1.0 + 0.3 * k) * standard_normal(2500, 2, rng);
      before.push_back(d_utility(ps));
      PosteriorSampleSet mapped;
      mapped.samples = ps.samples * b.transpose();
      after.push_back(d_utility(mapped));
    }
    const double scale = b.determinant() * b.determinant();
    for (std::size_t k = 0; k < before.size(); ++k)
      if (std::abs(after[k] * scale - before[k]) > 1e-9 * before[k])
        return false;
    const auto imax = [](const std::vector<double>& v) {
      return std::max_element(v.begin(), v.end()) - v.begin();
    };
    return imax(before) == imax(after);
  });

  report(7, "component suites", all_ok, detail);
}

void criterion8() {
  PipelineConfig cfg;
  cfg.parallelism = 0;
  cfg.seed = 7321;
  cfg.eki.ensemble_size = 25;
  cfg.eki.n_iterations = 3;
  cfg.gp.n_starts = 2;
  cfg.gp.opt_subset = 50;
  cfg.gp.max_train_points = 75;
  cfg.gp.opt_max_evals = 50;
  cfg.mcmc.n_samples = 2000;
  cfg.mcmc.thinning = 2;
  cfg.control.n_windows = 160;
  cfg.control.n_spinup = 10;

  const fs::path base = fs::temp_directory_path() / "tuq_acceptance_c8";
  fs::remove_all(base);
  auto run = [&](const std::string& sub) {
    PipelineConfig local = cfg;
    local.output_dir = (base / sub).string();
    return cmd_design(local, 5, false);
  };
  bool ok = run("a") == exit_code::kOk && run("b") == exit_code::kOk;

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  };
  int compared = 0;
  std::string mismatch;
  if (ok) {
    for (const auto& entry : fs::directory_iterator(base / "a")) {
      if (entry.path().extension() != ".csv") continue;
      ++compared;
      const fs::path twin = base / "b" / entry.path().filename();
      if (!fs::exists(twin) || slurp(entry.path()) != slurp(twin)) {
        ok = false;
        mismatch = entry.path().filename().string();
      }
    }
    if (compared == 0) ok = false;
  }
  fs::remove_all(base);
  char detail[120];
  std::snprintf(detail, sizeof(detail), "%d CSVs byte-identical%s%s", compared,
                mismatch.empty() ? "" : ", mismatch: ", mismatch.c_str());
  report(8, "repeat-run determinism", ok, detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite (8 criteria)\n");
  const Stage1 s = run_stage1_default();
  criterion1(s);
  criterion2();
  criterion3(s);
  criterion4(s);
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  if (g_failures == 0)
    std::printf("all criteria passed\n");
  else
    std::printf("%d criteria FAILED\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
