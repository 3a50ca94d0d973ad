#include "tuq/lorenz96_model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tuq/rng.hpp"

namespace tuq {

TwoScaleLorenz96::TwoScaleLorenz96(Lorenz96Config cfg) : cfg_(cfg) {
  if (cfg_.n_sites < 4 || cfg_.n_fast_per_site < 4)
    throw std::invalid_argument("TwoScaleLorenz96: grid too small");
}

Eigen::Vector2d TwoScaleLorenz96::physical_params(
    const Eigen::VectorXd& theta) const {
  check_theta(theta);
  const double f = cfg_.forcing_at_prior_mean + cfg_.forcing_scale * theta[0];
  const double h = cfg_.coupling_at_prior_mean +
                   cfg_.coupling_scale * (theta[1] - cfg_.theta2_ref);
  return {f, h};
}

TwoScaleLorenz96::State TwoScaleLorenz96::initial_state(
    std::uint64_t seed) const {
  Rng rng(seed);
  State s;
  s.x = standard_normal(cfg_.n_sites, rng);
  s.y = 0.1 * standard_normal(cfg_.n_sites * cfg_.n_fast_per_site, rng);
  return s;
}

void TwoScaleLorenz96::rhs(double f, double h, const State& s,
                           State& ds) const {
  const int n = cfg_.n_sites;
  const int m = cfg_.n_fast_per_site;
  const int nm = n * m;
  const double hcb = h * cfg_.c / cfg_.b;

  for (int i = 0; i < n; ++i) {
    const int im1 = (i - 1 + n) % n;
    const int im2 = (i - 2 + n) % n;
    const int ip1 = (i + 1) % n;
    double fast_sum = 0.0;
    for (int j = 0; j < m; ++j) fast_sum += s.y[i * m + j];
    ds.x[i] = -s.x[im1] * (s.x[im2] - s.x[ip1]) - s.x[i] + f - hcb * fast_sum;
  }
  for (int k = 0; k < nm; ++k) {
    const int kp1 = (k + 1) % nm;
    const int kp2 = (k + 2) % nm;
    const int km1 = (k - 1 + nm) % nm;
    const int site = k / m;
    ds.y[k] = -cfg_.c * cfg_.b * s.y[kp1] * (s.y[kp2] - s.y[km1]) -
              cfg_.c * s.y[k] + hcb * s.x[site];
  }
}

void TwoScaleLorenz96::rk4_step(double f, double h, State& s) const {
  static thread_local State k1, k2, k3, k4, tmp;
  auto resize = [&](State& st) {
    st.x.resize(s.x.size());
    st.y.resize(s.y.size());
  };
  resize(k1); resize(k2); resize(k3); resize(k4); resize(tmp);

  const double dt = cfg_.dt;
  rhs(f, h, s, k1);
  tmp.x = s.x + 0.5 * dt * k1.x; tmp.y = s.y + 0.5 * dt * k1.y;
  rhs(f, h, tmp, k2);
  tmp.x = s.x + 0.5 * dt * k2.x; tmp.y = s.y + 0.5 * dt * k2.y;
  rhs(f, h, tmp, k3);
  tmp.x = s.x + dt * k3.x; tmp.y = s.y + dt * k3.y;
  rhs(f, h, tmp, k4);
  s.x += (dt / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  s.y += (dt / 6.0) * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
}

void TwoScaleLorenz96::integrate_days(double f, double h, State& s,
                                      double days) const {
  const long steps =
      std::lround(days * cfg_.mtu_per_day / cfg_.dt);
  for (long t = 0; t < steps; ++t) {
    rk4_step(f, h, s);
    if (!s.x.allFinite() || !s.y.allFinite())
      throw EvalFailure("lorenz96: integration blew up");
  }
}

const Eigen::VectorXd& TwoScaleLorenz96::exceedance_thresholds() const {
  std::call_once(threshold_once_, [this] {
    const double f = cfg_.forcing_at_prior_mean;
    const double h = cfg_.coupling_at_prior_mean;
    State s = initial_state(0x96969696ULL);
    integrate_days(f, h, s, cfg_.spinup_days);
    const int days = static_cast<int>(cfg_.percentile_run_days);
    Eigen::MatrixXd daily(days, cfg_.n_sites);
    for (int d = 0; d < days; ++d) {
      integrate_days(f, h, s, 1.0);
      daily.row(d) = s.x;
    }
    thresholds_.resize(cfg_.n_sites);
    std::vector<double> col(static_cast<std::size_t>(days));
    for (int i = 0; i < cfg_.n_sites; ++i) {
      for (int d = 0; d < days; ++d) col[static_cast<std::size_t>(d)] = daily(d, i);
      const auto q = static_cast<std::size_t>(
          cfg_.exceedance_quantile * (days - 1));
      std::nth_element(col.begin(), col.begin() + static_cast<long>(q), col.end());
      thresholds_[i] = col[q];
    }
  });
  return thresholds_;
}

StatisticsVector TwoScaleLorenz96::window_stats(double f, double h,
                                                State& s) const {
  const int n = cfg_.n_sites;
  const int days = static_cast<int>(cfg_.window_days);
  const Eigen::VectorXd& thresh = exceedance_thresholds();

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd exceed = Eigen::VectorXd::Zero(n);
  for (int d = 0; d < days; ++d) {
    integrate_days(f, h, s, 1.0);
    sum += s.x;
    sumsq += s.x.cwiseProduct(s.x);
    for (int i = 0; i < n; ++i)
      if (s.x[i] > thresh[i]) exceed[i] += 1.0;
  }
  StatisticsVector out(3 * n);
  out.segment(0, n) = sum / days;
  out.segment(n, n) =
      (sumsq / days - (sum / days).cwiseProduct(sum / days)).cwiseMax(0.0);
  out.segment(2 * n, n) = exceed / days;
  return out;
}

StatisticsVector TwoScaleLorenz96::eval_finite(const Eigen::VectorXd& theta,
                                               std::uint64_t seed) const {
  const Eigen::Vector2d fh = physical_params(theta);
  State s = initial_state(seed);
  integrate_days(fh[0], fh[1], s, cfg_.spinup_days);
  StatisticsVector out = window_stats(fh[0], fh[1], s);
  count_evals(1);
  return out;
}

Eigen::MatrixXd TwoScaleLorenz96::run_control(const Eigen::VectorXd& theta,
                                              int n_windows, int n_spinup,
                                              std::uint64_t seed) const {
  if (n_windows <= n_spinup || n_spinup < 0)
    throw std::invalid_argument("run_control: need n_windows > n_spinup >= 0");
  const Eigen::Vector2d fh = physical_params(theta);
  // One trajectory, consecutive windows; the leading windows double as
  // spin-up and are discarded.
  State s = initial_state(seed);
  Eigen::MatrixXd samples(n_windows - n_spinup, output_dim());
  for (int t = 0; t < n_windows; ++t) {
    StatisticsVector row = window_stats(fh[0], fh[1], s);
    count_evals(1);
    if (t >= n_spinup) samples.row(t - n_spinup) = row;
  }
  return samples;
}

std::vector<Interval> TwoScaleLorenz96::row_bounds() const {
  const int n = cfg_.n_sites;
  std::vector<Interval> bounds(static_cast<std::size_t>(3 * n));
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    bounds[static_cast<std::size_t>(i)] = Interval{-inf, inf};          // mean
    bounds[static_cast<std::size_t>(n + i)] = Interval{0.0, inf};       // variance
    bounds[static_cast<std::size_t>(2 * n + i)] = Interval{0.0, 1.0};   // frequency
  }
  return bounds;
}

}  // namespace tuq
