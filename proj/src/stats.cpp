#include "tuq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tuq {

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) { ma += a[i]; mb += b[i]; }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0)
    throw std::invalid_argument("correlation: constant input");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

double spearman_rank_correlation(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman: need two equal-length series");
  return pearson(average_ranks(a), average_ranks(b));
}

Kde2d Kde2d::fit(const Eigen::MatrixXd& samples) {
  if (samples.cols() != 2 || samples.rows() < 2)
    throw std::invalid_argument("Kde2d: need n x 2 samples");
  Kde2d kde;
  kde.samples_ = samples;
  const double n = static_cast<double>(samples.rows());
  for (int d = 0; d < 2; ++d) {
    const double m = samples.col(d).mean();
    const double sd = std::sqrt(
        (samples.col(d).array() - m).square().sum() / (n - 1.0));
    kde.bandwidth_[d] = std::max(sd, 1e-12) * std::pow(n, -1.0 / 6.0);
  }
  return kde;
}

double Kde2d::operator()(const Eigen::Vector2d& x) const {
  const double n = static_cast<double>(samples_.rows());
  const double norm =
      1.0 / (2.0 * M_PI * bandwidth_[0] * bandwidth_[1] * n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < samples_.rows(); ++i) {
    const double u = (x[0] - samples_(i, 0)) / bandwidth_[0];
    const double v = (x[1] - samples_(i, 1)) / bandwidth_[1];
    sum += std::exp(-0.5 * (u * u + v * v));
  }
  return norm * sum;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty())
    throw std::invalid_argument("quantile: empty input");
  q = std::clamp(q, 0.0, 1.0);
  std::sort(values.begin(), values.end());
  const double pos = q * (static_cast<double>(values.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

bool hdr_contains(const Eigen::MatrixXd& samples, const Eigen::Vector2d& point,
                  double mass) {
  if (!(mass > 0.0 && mass < 1.0))
    throw std::invalid_argument("hdr_contains: mass must lie in (0,1)");
  const Kde2d kde = Kde2d::fit(samples);
  std::vector<double> density(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    density[static_cast<std::size_t>(i)] =
        kde(samples.row(i).transpose());
  const double threshold = quantile(std::move(density), 1.0 - mass);
  return kde(point) >= threshold;
}

}  // namespace tuq
