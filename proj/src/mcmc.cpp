#include "tuq/mcmc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tuq/rng.hpp"

namespace tuq {

double log_posterior(const Eigen::VectorXd& theta, const Eigen::VectorXd& data,
                     const GpEmulator& em, const GaussianPrior& prior) {
  if (data.size() != em.output_dim())
    throw std::invalid_argument("log_posterior: data/emulator mismatch");
  Eigen::VectorXd mean, var;
  em.predict(theta, mean, var);
  if (!mean.allFinite() || !var.allFinite() || (var.array() <= 0.0).any())
    return -std::numeric_limits<double>::infinity();

  double misfit = 0.0, log_det = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double r = data[i] - mean[i];
    misfit += r * r / var[i];
    log_det += std::log(var[i]);
  }
  const double prior_term = prior.mahalanobis_sq(theta);
  return -0.5 * (misfit + log_det + prior_term);
}

PosteriorSampleSet run_chain(const GpEmulator& em, const Eigen::VectorXd& data,
                             const GaussianPrior& prior,
                             const Eigen::VectorXd& start,
                             const McmcConfig& cfg, std::uint64_t seed) {
  auto target = [&](const Eigen::VectorXd& theta) {
    return log_posterior(theta, data, em, prior);
  };
  PosteriorSampleSet ps = run_chain(target, start, prior.sqrt(), cfg, seed);
  ps.design_label = em.design_label();
  return ps;
}

PosteriorSampleSet run_chain(const LogDensity& log_target,
                             const Eigen::VectorXd& start,
                             const Eigen::MatrixXd& proposal_sqrt,
                             const McmcConfig& cfg, std::uint64_t seed) {
  if (cfg.n_samples < 1000)
    throw std::invalid_argument("run_chain: need n_samples >= 1000");
  if (cfg.thinning < 1 || cfg.burn_fraction < 0.0 || cfg.burn_fraction >= 1.0)
    throw std::invalid_argument("run_chain: invalid thinning or burn fraction");

  const Eigen::Index p = start.size();
  const int n_burn = static_cast<int>(cfg.n_samples * cfg.burn_fraction);
  const int n_keep = (cfg.n_samples - n_burn + cfg.thinning - 1) / cfg.thinning;

  Rng rng(derive_seed(seed, {stream::kMcmc}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::VectorXd theta = start;
  double log_p = log_target(theta);
  if (!std::isfinite(log_p))
    throw std::invalid_argument("run_chain: start point has zero density");

  double step = cfg.init_step;
  const bool adapt = cfg.adapt && step > 0.0;
  double log_step = step > 0.0 ? std::log(step) : 0.0;

  PosteriorSampleSet ps;
  ps.samples.resize(n_keep, p);
  ps.seed = seed;
  Eigen::Index kept = 0;
  long accepted_post = 0, accepted_burn = 0;

  const int trace_every = std::max(1, cfg.n_samples / 50);
  for (int t = 0; t < cfg.n_samples; ++t) {
    const Eigen::VectorXd prop =
        theta + step * (proposal_sqrt * standard_normal(p, rng));
    const double log_p_prop = log_target(prop);
    const double log_ratio = log_p_prop - log_p;
    const double alpha =
        std::isfinite(log_p_prop) ? std::min(1.0, std::exp(log_ratio)) : 0.0;
    bool accepted = false;
    if (alpha > 0.0 && unif(rng) < alpha) {
      accepted = true;
      theta = prop;
      log_p = log_p_prop;
      if (t < n_burn) ++accepted_burn; else ++accepted_post;
    }

    if (t < n_burn) {
      if (adapt) {
        // The indicator (not the probability) keeps the adaptation exactly
        // invariant to constant shifts of the log target.
        const double gamma = 1.0 / std::pow(t + 10.0, 0.66);
        log_step += gamma * ((accepted ? 1.0 : 0.0) - cfg.target_acceptance);
        step = std::exp(log_step);
      }
      if (t + 1 == n_burn && accepted_burn == 0 && adapt)
        throw std::runtime_error(
            "run_chain: no proposals accepted during burn-in (step scale " +
            std::to_string(step) + ")");
    } else if ((t - n_burn) % cfg.thinning == 0) {
      ps.samples.row(kept++) = theta.transpose();
    }
    if (t % trace_every == 0) ps.step_trace.push_back(step);
  }

  ps.samples.conservativeResize(kept, p);
  ps.acceptance_rate =
      static_cast<double>(accepted_post) /
      std::max(1, cfg.n_samples - n_burn);
  ps.final_step = step;
  return ps;
}

CovarianceMatrix posterior_cov(const PosteriorSampleSet& ps) {
  return estimate_covariance(ps.samples);
}

}  // namespace tuq
