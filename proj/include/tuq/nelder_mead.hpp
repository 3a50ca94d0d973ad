#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace tuq {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

/// Derivative-free simplex minimization; standard reflection/expansion/
/// contraction coefficients, simplex spawned at x0 with per-dimension steps.
inline NelderMeadResult minimize_nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, const Eigen::VectorXd& step, int max_evals,
    double tol = 1e-7) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> fs(static_cast<std::size_t>(n + 1));
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return f(x);
  };
  for (Eigen::Index i = 0; i < n; ++i) xs[static_cast<std::size_t>(i) + 1][i] += step[i];
  for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = eval(xs[i]);

  std::vector<std::size_t> order(xs.size());
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
    const std::size_t best = order.front(), worst = order.back();
    const std::size_t second_worst = order[order.size() - 2];
    if (std::abs(fs[worst] - fs[best]) <=
        tol * (std::abs(fs[best]) + std::abs(fs[worst]) + 1e-300))
      break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (i != worst) centroid += xs[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - xs[worst]);
    const double f_ref = eval(reflected);
    if (f_ref < fs[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - xs[worst]);
      const double f_exp = eval(expanded);
      if (f_exp < f_ref) { xs[worst] = expanded; fs[worst] = f_exp; }
      else { xs[worst] = reflected; fs[worst] = f_ref; }
    } else if (f_ref < fs[second_worst]) {
      xs[worst] = reflected;
      fs[worst] = f_ref;
    } else {
      const Eigen::VectorXd contracted =
          centroid + 0.5 * (xs[worst] - centroid);
      const double f_con = eval(contracted);
      if (f_con < fs[worst]) {
        xs[worst] = contracted;
        fs[worst] = f_con;
      } else {
        for (std::size_t i = 0; i < xs.size(); ++i) {
          if (i == best) continue;
          xs[i] = xs[best] + 0.5 * (xs[i] - xs[best]);
          fs[i] = eval(xs[i]);
        }
      }
    }
  }

  const std::size_t best = static_cast<std::size_t>(
      std::min_element(fs.begin(), fs.end()) - fs.begin());
  return {xs[best], fs[best], evals};
}

}  // namespace tuq
