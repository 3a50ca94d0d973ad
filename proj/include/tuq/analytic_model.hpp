#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

#include "tuq/forward_model.hpp"
#include "tuq/params.hpp"

namespace tuq {

/// Constants of the analytic aquaplanet surrogate. The three fields share a
/// Gaussian tropical weight w(phi) centered on an ITCZ latitude that migrates
/// with season; parameter sensitivity is concentrated under that weight and
/// dies off toward the extratropics.
struct AnalyticConfig {
  SeasonMode mode = SeasonMode::kStationary;
  int n_lat = 32;
  double window_days = 30.0;  // bookkeeping only; variability is prescribed

  double itcz_width_deg = 15.0;
  double itcz_center_deg = 0.0;
  std::array<double, 4> seasonal_centers_deg = {0.0, 8.0, 0.0, -8.0};

  double rh_background = 0.4;

  double precip_base_mm_day = 2.0;
  double precip_rh_gain_mm_day = 6.0;
  double precip_background_mm_day = 1.5;
  double precip_tau_scale_s = 86400.0;

  double exceed_tau_ref_s = 7200.0;
  double exceed_slope = 2.0;
  double exceed_amplitude = 0.5;
  double exceed_offset = 0.1;

  // Internal variability of window averages: squared-exponential in latitude,
  // block diagonal across statistics and seasons.
  double noise_corr_length_deg = 10.0;
  double noise_marginal_frac = 0.05;
  PhysicalParams noise_ref_params{0.5, 43200.0};
};

/// Closed-form surrogate with Gaussian internal variability. eval_mean is the
/// exact infinite-time map; eval_finite adds one draw of the prescribed
/// window-average variability.
class AnalyticAquaplanet final : public ForwardModel {
 public:
  explicit AnalyticAquaplanet(AnalyticConfig cfg = {});

  std::string kind() const override { return "analytic-aquaplanet"; }
  SeasonMode mode() const override { return cfg_.mode; }
  int n_lat() const override { return cfg_.n_lat; }
  int n_stats() const override { return 3; }
  bool has_mean() const override { return true; }

  StatisticsVector eval_mean(const Eigen::VectorXd& theta) const override;
  StatisticsVector eval_finite(const Eigen::VectorXd& theta,
                               std::uint64_t seed) const override;
  Eigen::MatrixXd run_control(const Eigen::VectorXd& theta, int n_windows,
                              int n_spinup, std::uint64_t seed) const override;
  std::vector<Interval> row_bounds() const override;

  const AnalyticConfig& config() const { return cfg_; }

  /// Covariance of the prescribed window-average variability (full dim).
  const Eigen::MatrixXd& model_covariance() const { return sigma_model_; }

 private:
  AnalyticConfig cfg_;
  Eigen::VectorXd phi_deg_;
  Eigen::MatrixXd corr_chol_;       // n_lat x n_lat, unit-variance factor
  Eigen::Vector3d marginal_std_;    // per statistic
  Eigen::MatrixXd sigma_model_;

  double season_center(int season) const;
};

}  // namespace tuq
