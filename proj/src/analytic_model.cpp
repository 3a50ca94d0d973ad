#include "tuq/analytic_model.hpp"

#include <cmath>

#include "tuq/rng.hpp"

namespace tuq {

AnalyticAquaplanet::AnalyticAquaplanet(AnalyticConfig cfg) : cfg_(cfg) {
  phi_deg_ = latitude_centers_deg(cfg_.n_lat);

  // Unit-variance squared-exponential correlation across latitude.
  const int n = cfg_.n_lat;
  Eigen::MatrixXd corr(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = (phi_deg_[i] - phi_deg_[j]) / cfg_.noise_corr_length_deg;
      corr(i, j) = std::exp(-0.5 * d * d);
    }
  corr.diagonal().array() += 1e-10;
  corr_chol_ = Eigen::LLT<Eigen::MatrixXd>(corr).matrixL();

  // Marginal std per statistic: a fraction of the field's range at the
  // reference parameters, taken across all latitudes and seasons.
  const Eigen::Vector2d theta_ref = transform_forward(cfg_.noise_ref_params).theta;
  const StatisticsVector ref = eval_mean(theta_ref);
  for (int stat = 0; stat < 3; ++stat) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int season = 0; season < n_seasons(); ++season)
      for (int i = 0; i < n; ++i) {
        const double v = ref[season * 3 * n + stat * n + i];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    marginal_std_[stat] = std::max(cfg_.noise_marginal_frac * (hi - lo), 1e-8);
  }

  sigma_model_ = Eigen::MatrixXd::Zero(output_dim(), output_dim());
  const Eigen::MatrixXd corr_full = corr_chol_ * corr_chol_.transpose();
  for (int season = 0; season < n_seasons(); ++season)
    for (int stat = 0; stat < 3; ++stat) {
      const int off = season * 3 * n + stat * n;
      sigma_model_.block(off, off, n, n) =
          marginal_std_[stat] * marginal_std_[stat] * corr_full;
    }
}

double AnalyticAquaplanet::season_center(int season) const {
  if (cfg_.mode == SeasonMode::kSeasonal)
    return cfg_.seasonal_centers_deg[static_cast<std::size_t>(season)];
  return cfg_.itcz_center_deg;
}

StatisticsVector AnalyticAquaplanet::eval_mean(
    const Eigen::VectorXd& theta) const {
  check_theta(theta);
  const PhysicalParams p = transform_inverse(Eigen::Vector2d(theta));
  const int n = cfg_.n_lat;

  // Slow relaxation damps convective precipitation; the extratropical
  // background is insensitive to both parameters so that all information
  // concentrates under the tropical weight.
  const double precip_scale = 1.0 + p.tau_s / cfg_.precip_tau_scale_s;
  const double exceed_level =
      logistic(cfg_.exceed_slope * std::log(p.tau_s / cfg_.exceed_tau_ref_s));

  StatisticsVector out(output_dim());
  for (int season = 0; season < n_seasons(); ++season) {
    const double center = season_center(season);
    const int off = season * 3 * n;
    for (int i = 0; i < n; ++i) {
      const double a = (phi_deg_[i] - center) / cfg_.itcz_width_deg;
      const double w = std::exp(-a * a);
      out[off + i] = p.rh * w + cfg_.rh_background * (1.0 - w);
      out[off + n + i] =
          (cfg_.precip_base_mm_day + cfg_.precip_rh_gain_mm_day * p.rh) * w /
              precip_scale +
          cfg_.precip_background_mm_day * (1.0 - w);
      out[off + 2 * n + i] =
          exceed_level * w * cfg_.exceed_amplitude + cfg_.exceed_offset;
    }
  }
  return out;
}

StatisticsVector AnalyticAquaplanet::eval_finite(const Eigen::VectorXd& theta,
                                                 std::uint64_t seed) const {
  StatisticsVector out = eval_mean(theta);
  Rng rng(seed);
  const int n = cfg_.n_lat;
  for (int season = 0; season < n_seasons(); ++season)
    for (int stat = 0; stat < 3; ++stat) {
      const int off = season * 3 * n + stat * n;
      out.segment(off, n) +=
          marginal_std_[stat] * (corr_chol_ * standard_normal(n, rng));
    }
  // Window averages cannot leave the physical range.
  const auto bounds = row_bounds();
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const Interval& b = bounds[static_cast<std::size_t>(i)];
    out[i] = std::clamp(out[i], b.lo, b.hi);
  }
  count_evals(1);
  return out;
}

Eigen::MatrixXd AnalyticAquaplanet::run_control(const Eigen::VectorXd& theta,
                                                int n_windows, int n_spinup,
                                                std::uint64_t seed) const {
  if (n_windows <= n_spinup || n_spinup < 0)
    throw std::invalid_argument("run_control: need n_windows > n_spinup >= 0");
  Eigen::MatrixXd samples(n_windows - n_spinup, output_dim());
  // Windows are independent draws; spin-up windows are generated (and
  // counted) but discarded, matching a sequential simulation's cost.
  for (int t = 0; t < n_windows; ++t) {
    const StatisticsVector row =
        eval_finite(theta, derive_seed(seed, {stream::kControl,
                                              static_cast<std::uint64_t>(t)}));
    if (t >= n_spinup) samples.row(t - n_spinup) = row;
  }
  return samples;
}

std::vector<Interval> AnalyticAquaplanet::row_bounds() const {
  std::vector<Interval> bounds(static_cast<std::size_t>(output_dim()));
  const int n = cfg_.n_lat;
  for (int season = 0; season < n_seasons(); ++season)
    for (int stat = 0; stat < 3; ++stat)
      for (int i = 0; i < n; ++i) {
        Interval b;
        if (stat == 0 || stat == 2) b = Interval{0.0, 1.0};   // rh, exceedance
        else b = Interval{0.0, std::numeric_limits<double>::infinity()};
        bounds[static_cast<std::size_t>(season * 3 * n + stat * n + i)] = b;
      }
  return bounds;
}

}  // namespace tuq
