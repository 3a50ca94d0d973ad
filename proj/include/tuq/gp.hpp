#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

#include "tuq/decorrelator.hpp"

namespace tuq {

/// Anisotropic squared-exponential kernel hyperparameters plus a nugget
/// absorbing the finite-window sampling noise of the training outputs.
struct GpHyper {
  Eigen::VectorXd lengthscales;  ///< one per input dimension, > 0
  double signal_var = 1.0;       ///< > 0
  double nugget = 1e-6;          ///< > 0

  bool valid() const {
    return lengthscales.size() > 0 && (lengthscales.array() > 0.0).all() &&
           signal_var > 0.0 && nugget > 0.0;
  }
};

/// One scalar zero-mean GP conditioned on centered targets. The predictive
/// mean adds the training mean back; the predictive variance includes the
/// nugget, so far from data it reverts to signal_var + nugget.
class ScalarGp {
 public:
  static ScalarGp condition(const Eigen::MatrixXd& inputs,
                            const Eigen::VectorXd& targets,
                            const GpHyper& hyper, double nugget_floor_rel);

  double predict_mean(const Eigen::VectorXd& x) const;
  double predict_var(const Eigen::VectorXd& x) const;
  void predict(const Eigen::VectorXd& x, double& mean, double& var) const;

  /// Closed-form gradient of the predictive mean (squared-exponential
  /// kernel).
  Eigen::VectorXd predict_mean_gradient(const Eigen::VectorXd& x) const;

  const GpHyper& hyper() const { return hyper_; }
  double target_mean() const { return y_mean_; }
  double log_marginal_likelihood() const { return lml_; }
  const Eigen::MatrixXd& inputs() const { return x_; }

  /// Marginal log likelihood of (inputs, targets) under `hyper`; -inf when
  /// the kernel matrix cannot be factorized even after the nugget retry.
  static double log_marginal_likelihood(const Eigen::MatrixXd& inputs,
                                        const Eigen::VectorXd& targets,
                                        const GpHyper& hyper,
                                        double nugget_floor_rel);

 private:
  Eigen::MatrixXd x_;      // n x p
  Eigen::VectorXd y_;      // centered targets
  double y_mean_ = 0.0;
  GpHyper hyper_;
  Eigen::MatrixXd chol_l_;  // lower Cholesky of K + nugget I
  Eigen::VectorXd alpha_;   // (K + nugget I)^{-1} y
  double lml_ = 0.0;

  void kernel_vector(const Eigen::VectorXd& x, Eigen::VectorXd& k) const;

  friend struct GpEmulatorIo;
};

struct GpTrainConfig {
  int n_starts = 5;
  double nugget_floor_rel = 1e-8;
  int max_train_points = 256;   ///< conditioning set cap (even stride)
  int opt_subset = 192;         ///< hyperparameter-search set cap
  int opt_max_evals = 150;
  std::uint64_t seed = 0x6709;  ///< start-point stream
};

/// Per-design surrogate of the restricted infinite-time map: independent
/// scalar GPs over the whitened output dimensions, sharing the decorrelator.
/// `extra_noise` is an optional fixed additive predictive variance per
/// dimension (used when the observed data carry noise beyond what the
/// training outputs carry).
class GpEmulator {
 public:
  GpEmulator() = default;
  GpEmulator(Decorrelator dec, std::vector<ScalarGp> gps,
             Eigen::VectorXd extra_noise, std::string design_label);

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const {
    return static_cast<Eigen::Index>(gps_.size());
  }
  const Decorrelator& decorrelator() const { return dec_; }
  const std::vector<ScalarGp>& gps() const { return gps_; }
  const Eigen::VectorXd& extra_noise() const { return extra_noise_; }
  const std::string& design_label() const { return design_label_; }

  /// Predictive mean and (diagonal) covariance in the whitened output basis.
  void predict(const Eigen::VectorXd& theta, Eigen::VectorXd& mean,
               Eigen::VectorXd& var) const;

  nlohmann::ordered_json to_json() const;
  static GpEmulator from_json(const nlohmann::ordered_json& j);

 private:
  Decorrelator dec_;
  std::vector<ScalarGp> gps_;
  Eigen::VectorXd extra_noise_;
  std::string design_label_;
};

/// Fits one scalar GP per whitened output dimension by maximizing the log
/// marginal likelihood with multi-start simplex search; starts are drawn
/// log-uniformly over [1e-2, 1e2] times the data scales.
GpEmulator train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                 const Decorrelator& dec, const GpTrainConfig& cfg = {},
                 const Eigen::VectorXd& extra_noise = Eigen::VectorXd(),
                 const std::string& design_label = "");

}  // namespace tuq
