#include "tuq/eki.hpp"

#include <stdexcept>
#include <vector>

#include "tuq/forward_model.hpp"
#include "tuq/parallel.hpp"
#include "tuq/rng.hpp"

namespace tuq {

namespace {

/// Spectral pseudo-inverse applied to the columns of b, with a relative
/// eigenvalue cutoff. Throws if the matrix has no usable spectrum at all.
Eigen::MatrixXd pinv_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           double rel_cutoff = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(lmax > 0.0))
    throw std::runtime_error("eki: singular update matrix (zero spectrum)");
  const double cutoff = rel_cutoff * lmax;
  Eigen::VectorXd inv = es.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i)
    inv[i] = inv[i] > cutoff ? 1.0 / inv[i] : 0.0;
  return es.eigenvectors() *
         (inv.asDiagonal() * (es.eigenvectors().transpose() * b));
}

}  // namespace

Ensemble init_ensemble(const GaussianPrior& prior, int ensemble_size,
                       std::uint64_t seed) {
  if (ensemble_size < 3)
    throw std::invalid_argument("init_ensemble: need at least 3 members");
  const Eigen::MatrixXd sqrt_cov = prior.sqrt();
  Rng rng(seed);
  Ensemble ens;
  ens.members.resize(ensemble_size, prior.dim());
  for (int j = 0; j < ensemble_size; ++j)
    ens.members.row(j) =
        (prior.mean + sqrt_cov * standard_normal(prior.dim(), rng)).transpose();
  return ens;
}

Ensemble eki_update(const Ensemble& ens, const Eigen::VectorXd& y,
                    const CovarianceMatrix& noise_cov, std::uint64_t seed,
                    const EkiUpdateOptions& opt) {
  if (!ens.has_evals)
    throw std::invalid_argument("eki_update: ensemble has no evaluations");
  const Eigen::Index j_count = ens.size();
  const Eigen::Index d = ens.evals.cols();
  if (y.size() != d || noise_cov.dim() != d)
    throw std::invalid_argument("eki_update: dimension mismatch");

  const Eigen::RowVectorXd theta_mean = ens.members.colwise().mean();
  const Eigen::RowVectorXd g_mean = ens.evals.colwise().mean();
  const Eigen::MatrixXd dtheta = ens.members.rowwise() - theta_mean;
  const Eigen::MatrixXd dg = ens.evals.rowwise() - g_mean;
  const double norm = static_cast<double>(j_count - 1);
  const Eigen::MatrixXd cov_tg = dtheta.transpose() * dg / norm;  // p x d
  const Eigen::MatrixXd cov_gg = dg.transpose() * dg / norm;      // d x d

  // Residuals y + eta_j - G(theta_j), one column per member.
  Eigen::MatrixXd residuals(d, j_count);
  if (opt.perturb_observations) {
    Rng rng(derive_seed(seed, {stream::kEki, 0xAB}));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(noise_cov.matrix());
    const Eigen::MatrixXd noise_sqrt =
        es.eigenvectors() *
        es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    for (Eigen::Index j = 0; j < j_count; ++j)
      residuals.col(j) =
          y + noise_sqrt * standard_normal(d, rng) - ens.evals.row(j).transpose();
  } else {
    for (Eigen::Index j = 0; j < j_count; ++j)
      residuals.col(j) = y - ens.evals.row(j).transpose();
  }

  const Eigen::MatrixXd gain_applied =
      cov_tg * pinv_solve(cov_gg + noise_cov.matrix(), residuals);  // p x J

  Ensemble out;
  out.members = ens.members + gain_applied.transpose();
  out.iteration = ens.iteration + 1;
  return out;
}

TrainingSet run_calibration(const ForwardEval& eval, const GaussianPrior& prior,
                            const Eigen::VectorXd& y,
                            const CovarianceMatrix& noise_cov,
                            const CalibrationConfig& cfg, std::uint64_t seed) {
  if (cfg.n_iterations < 1)
    throw std::invalid_argument("run_calibration: need n_iterations >= 1");

  Ensemble ens = init_ensemble(prior, cfg.ensemble_size,
                               derive_seed(seed, {stream::kEki, 0}));
  const Eigen::Index n_total =
      static_cast<Eigen::Index>(cfg.ensemble_size) * cfg.n_iterations;

  TrainingSet ts;
  ts.thetas.resize(n_total, prior.dim());
  ts.iteration.resize(n_total);
  Eigen::Index filled = 0;

  const Eigen::MatrixXd prior_sqrt = prior.sqrt();
  for (int it = 0; it < cfg.n_iterations; ++it) {
    std::vector<Eigen::VectorXd> results(
        static_cast<std::size_t>(cfg.ensemble_size));
    parallel_for(
        cfg.ensemble_size,
        [&](long j) {
          const auto tag_it = static_cast<std::uint64_t>(it);
          const auto tag_j = static_cast<std::uint64_t>(j);
          Eigen::VectorXd theta = ens.members.row(j).transpose();
          try {
            results[static_cast<std::size_t>(j)] =
                eval(theta, derive_seed(seed, {stream::kEki, 1, tag_it, tag_j}));
          } catch (const EvalFailure&) {
            // One retry from a fresh prior draw, then give up.
            Rng rng(derive_seed(seed, {stream::kEki, 2, tag_it, tag_j}));
            theta = prior.mean + prior_sqrt * standard_normal(prior.dim(), rng);
            results[static_cast<std::size_t>(j)] =
                eval(theta, derive_seed(seed, {stream::kEki, 3, tag_it, tag_j}));
            ens.members.row(j) = theta.transpose();
          }
        },
        cfg.parallelism);
    ens.evals.resize(cfg.ensemble_size, results.front().size());
    for (int j = 0; j < cfg.ensemble_size; ++j)
      ens.evals.row(j) = results[static_cast<std::size_t>(j)].transpose();
    ens.has_evals = true;

    ts.thetas.middleRows(filled, cfg.ensemble_size) = ens.members;
    if (ts.outputs.size() == 0) ts.outputs.resize(n_total, ens.evals.cols());
    ts.outputs.middleRows(filled, cfg.ensemble_size) = ens.evals;
    ts.iteration.segment(filled, cfg.ensemble_size).setConstant(it);
    filled += cfg.ensemble_size;

    if (it + 1 < cfg.n_iterations)
      ens = eki_update(ens, y, noise_cov,
                       derive_seed(seed, {stream::kEki, 4,
                                          static_cast<std::uint64_t>(it)}));
  }
  return ts;
}

double weighted_misfit_sq(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                          const CovarianceMatrix& weight) {
  const Eigen::VectorXd r = y - g;
  const Eigen::VectorXd solved = pinv_solve(weight.matrix(), r);
  return r.dot(solved);
}

}  // namespace tuq
