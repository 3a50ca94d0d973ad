#pragma once

#include <cmath>
#include <cstdint>
#include <mutex>

#include <Eigen/Dense>

#include "tuq/forward_model.hpp"

namespace tuq {

/// Constants of the two-scale Lorenz-96 surrogate: 32 slow sites, 8 fast
/// variables per site, standard timescale separation c = b = 10. The two
/// computational parameters map affinely onto forcing F and coupling h, with
/// the prior mean landing at (F, h) = (10, 1).
struct Lorenz96Config {
  int n_sites = 32;
  int n_fast_per_site = 8;
  double c = 10.0;
  double b = 10.0;

  double forcing_at_prior_mean = 10.0;
  double coupling_at_prior_mean = 1.0;
  double forcing_scale = 2.0;   // dF per unit theta_1
  double coupling_scale = 0.3;  // dh per unit (theta_2 - theta2_ref)
  double theta2_ref = std::log(43200.0);

  double dt = 0.005;              // model time units
  double mtu_per_day = 0.2;
  double window_days = 30.0;
  double spinup_days = 30.0;

  // Reference run used once to fix the per-site exceedance thresholds.
  double percentile_run_days = 2000.0;
  double exceedance_quantile = 0.9;
};

/// Chaotic surrogate without a closed-form infinite-time map. Statistics per
/// window and site: mean of the slow variable, variance of the slow variable,
/// and the frequency of daily values exceeding the site's long-run quantile.
class TwoScaleLorenz96 final : public ForwardModel {
 public:
  explicit TwoScaleLorenz96(Lorenz96Config cfg = {});

  std::string kind() const override { return "lorenz96-two-scale"; }
  SeasonMode mode() const override { return SeasonMode::kStationary; }
  int n_lat() const override { return cfg_.n_sites; }
  int n_stats() const override { return 3; }

  StatisticsVector eval_finite(const Eigen::VectorXd& theta,
                               std::uint64_t seed) const override;
  Eigen::MatrixXd run_control(const Eigen::VectorXd& theta, int n_windows,
                              int n_spinup, std::uint64_t seed) const override;
  std::vector<Interval> row_bounds() const override;

  const Lorenz96Config& config() const { return cfg_; }

  Eigen::Vector2d physical_params(const Eigen::VectorXd& theta) const;

  /// Per-site long-run exceedance thresholds (computed lazily, cached).
  const Eigen::VectorXd& exceedance_thresholds() const;

 private:
  struct State {
    Eigen::VectorXd x;  // slow, n_sites
    Eigen::VectorXd y;  // fast, n_sites * n_fast_per_site, one ring
  };

  Lorenz96Config cfg_;
  mutable std::once_flag threshold_once_;
  mutable Eigen::VectorXd thresholds_;

  State initial_state(std::uint64_t seed) const;
  void rhs(double f, double h, const State& s, State& ds) const;
  void rk4_step(double f, double h, State& s) const;
  void integrate_days(double f, double h, State& s, double days) const;
  StatisticsVector window_stats(double f, double h, State& s) const;
};

}  // namespace tuq
