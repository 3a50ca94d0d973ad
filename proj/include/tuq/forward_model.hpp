#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tuq/design_space.hpp"
#include "tuq/noise.hpp"

namespace tuq {

/// Time-aggregated forward-map output; length n_stats * n_lat * n_seasons.
using StatisticsVector = Eigen::VectorXd;

/// Thrown when a model evaluation does not produce usable statistics
/// (e.g. the integration left the attractor and blew up).
struct EvalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Interface for forward models mapping computational parameters to
/// time-aggregated statistics. Evaluation is pure given (theta, seed);
/// instances are immutable after construction apart from the evaluation
/// counter, and safe to share across threads.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual std::string kind() const = 0;
  virtual SeasonMode mode() const = 0;
  virtual int n_lat() const = 0;
  virtual int n_stats() const = 0;
  int n_seasons() const { return mode() == SeasonMode::kSeasonal ? 4 : 1; }
  Eigen::Index output_dim() const {
    return static_cast<Eigen::Index>(n_stats()) * n_lat() * n_seasons();
  }

  /// Exact infinite-time statistics. Only analytically tractable kinds
  /// implement this; the default signals the capability is absent.
  virtual StatisticsVector eval_mean(const Eigen::VectorXd& theta) const {
    (void)theta;
    throw std::logic_error(kind() + ": no closed-form infinite-time statistics");
  }

  virtual bool has_mean() const { return false; }

  /// One finite-window aggregation from a seed-determined initial condition.
  virtual StatisticsVector eval_finite(const Eigen::VectorXd& theta,
                                       std::uint64_t seed) const = 0;

  /// Sequential control windows at fixed theta; returns the
  /// (n_windows - n_spinup) retained windows, one per row.
  virtual Eigen::MatrixXd run_control(const Eigen::VectorXd& theta,
                                      int n_windows, int n_spinup,
                                      std::uint64_t seed) const = 0;

  /// Physically admissible interval per statistics row.
  virtual std::vector<Interval> row_bounds() const = 0;

  long eval_count() const { return count_.load(std::memory_order_relaxed); }
  void reset_eval_count() const { count_.store(0, std::memory_order_relaxed); }

 protected:
  void count_evals(long n) const {
    count_.fetch_add(n, std::memory_order_relaxed);
  }

  static void check_theta(const Eigen::VectorXd& theta) {
    if (theta.size() != 2 || !theta.allFinite())
      throw std::invalid_argument("ForwardModel: theta must be a finite 2-vector");
  }

 private:
  mutable std::atomic<long> count_{0};
};

/// Design space matching a model's statistics layout.
inline DesignSpace design_space_for(const ForwardModel& model, int stencil) {
  DesignSpace ds;
  ds.mode = model.mode();
  ds.n_lat = model.n_lat();
  ds.n_stats = model.n_stats();
  ds.stencil = stencil;
  ds.validate();
  return ds;
}

}  // namespace tuq
