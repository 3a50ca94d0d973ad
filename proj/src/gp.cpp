#include "tuq/gp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tuq/nelder_mead.hpp"
#include "tuq/parallel.hpp"
#include "tuq/rng.hpp"

namespace tuq {

namespace {

constexpr double kLogClamp = 23.0;  // e^23 ~ 1e10 keeps kernels finite

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const GpHyper& h) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd scaled =
      x * h.lengthscales.cwiseInverse().asDiagonal();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = h.signal_var;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d2 = (scaled.row(i) - scaled.row(j)).squaredNorm();
      k(i, j) = k(j, i) = h.signal_var * std::exp(-0.5 * d2);
    }
  }
  return k;
}

/// Cholesky of K + nugget I with one nugget-floor retry.
bool factor(const Eigen::MatrixXd& x, const GpHyper& h, double floor_rel,
            double& nugget_used, Eigen::LLT<Eigen::MatrixXd>& llt) {
  Eigen::MatrixXd k = kernel_matrix(x, h);
  nugget_used = h.nugget;
  k.diagonal().array() += nugget_used;
  llt.compute(k);
  if (llt.info() == Eigen::Success) return true;
  const double raised = std::max(h.nugget, floor_rel * h.signal_var);
  if (raised > nugget_used) {
    k.diagonal().array() += raised - nugget_used;
    nugget_used = raised;
    llt.compute(k);
    if (llt.info() == Eigen::Success) return true;
  }
  return false;
}

double lml_from_factor(const Eigen::LLT<Eigen::MatrixXd>& llt,
                       const Eigen::VectorXd& y_centered) {
  const Eigen::VectorXd alpha = llt.solve(y_centered);
  const double n = static_cast<double>(y_centered.size());
  double log_det_half = 0.0;
  for (Eigen::Index i = 0; i < y_centered.size(); ++i)
    log_det_half += std::log(llt.matrixLLT()(i, i));
  return -0.5 * y_centered.dot(alpha) - log_det_half -
         0.5 * n * std::log(2.0 * M_PI);
}

/// Even-stride row subset of size at most `cap`.
std::vector<Eigen::Index> stride_subset(Eigen::Index n, Eigen::Index cap) {
  std::vector<Eigen::Index> idx;
  if (cap <= 0 || n <= cap) {
    idx.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    return idx;
  }
  idx.reserve(static_cast<std::size_t>(cap));
  for (Eigen::Index i = 0; i < cap; ++i)
    idx.push_back(i * n / cap);
  return idx;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m,
                          const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

GpHyper unpack_log(const Eigen::VectorXd& z, Eigen::Index p) {
  GpHyper h;
  h.lengthscales = z.head(p).array().exp();
  h.signal_var = std::exp(z[p]);
  h.nugget = std::exp(z[p + 1]);
  return h;
}

}  // namespace

ScalarGp ScalarGp::condition(const Eigen::MatrixXd& inputs,
                             const Eigen::VectorXd& targets,
                             const GpHyper& hyper, double nugget_floor_rel) {
  if (inputs.rows() != targets.size() || inputs.rows() < 1)
    throw std::invalid_argument("ScalarGp: inputs/targets mismatch");
  if (!hyper.valid() || hyper.lengthscales.size() != inputs.cols())
    throw std::invalid_argument("ScalarGp: invalid hyperparameters");

  ScalarGp gp;
  gp.x_ = inputs;
  gp.y_mean_ = targets.mean();
  gp.y_ = targets.array() - gp.y_mean_;
  gp.hyper_ = hyper;

  Eigen::LLT<Eigen::MatrixXd> llt;
  double nugget_used = 0.0;
  if (!factor(inputs, hyper, nugget_floor_rel, nugget_used, llt))
    throw std::runtime_error("ScalarGp: kernel matrix not positive definite");
  gp.hyper_.nugget = nugget_used;
  gp.chol_l_ = llt.matrixL();
  gp.alpha_ = llt.solve(gp.y_);
  gp.lml_ = lml_from_factor(llt, gp.y_);
  return gp;
}

double ScalarGp::log_marginal_likelihood(const Eigen::MatrixXd& inputs,
                                         const Eigen::VectorXd& targets,
                                         const GpHyper& hyper,
                                         double nugget_floor_rel) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double nugget_used = 0.0;
  if (!factor(inputs, hyper, nugget_floor_rel, nugget_used, llt))
    return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd centered = targets.array() - targets.mean();
  return lml_from_factor(llt, centered);
}

void ScalarGp::kernel_vector(const Eigen::VectorXd& x,
                             Eigen::VectorXd& k) const {
  const Eigen::Index n = x_.rows();
  k.resize(n);
  const Eigen::VectorXd inv_ls = hyper_.lengthscales.cwiseInverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d2 =
        ((x_.row(i).transpose() - x).cwiseProduct(inv_ls)).squaredNorm();
    k[i] = hyper_.signal_var * std::exp(-0.5 * d2);
  }
}

double ScalarGp::predict_mean(const Eigen::VectorXd& x) const {
  Eigen::VectorXd k;
  kernel_vector(x, k);
  return y_mean_ + k.dot(alpha_);
}

double ScalarGp::predict_var(const Eigen::VectorXd& x) const {
  Eigen::VectorXd k;
  kernel_vector(x, k);
  const Eigen::VectorXd v =
      chol_l_.triangularView<Eigen::Lower>().solve(k);
  const double prior_var = hyper_.signal_var + hyper_.nugget;
  return std::max(prior_var - v.squaredNorm(), 1e-12 * prior_var);
}

Eigen::VectorXd ScalarGp::predict_mean_gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd k;
  kernel_vector(x, k);
  const Eigen::VectorXd inv_ls2 = hyper_.lengthscales.cwiseAbs2().cwiseInverse();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index i = 0; i < x_.rows(); ++i)
    grad += alpha_[i] * k[i] *
            (x_.row(i).transpose() - x).cwiseProduct(inv_ls2);
  return grad;
}

void ScalarGp::predict(const Eigen::VectorXd& x, double& mean,
                       double& var) const {
  Eigen::VectorXd k;
  kernel_vector(x, k);
  mean = y_mean_ + k.dot(alpha_);
  const Eigen::VectorXd v =
      chol_l_.triangularView<Eigen::Lower>().solve(k);
  const double prior_var = hyper_.signal_var + hyper_.nugget;
  var = std::max(prior_var - v.squaredNorm(), 1e-12 * prior_var);
}

GpEmulator::GpEmulator(Decorrelator dec, std::vector<ScalarGp> gps,
                       Eigen::VectorXd extra_noise, std::string design_label)
    : dec_(std::move(dec)),
      gps_(std::move(gps)),
      extra_noise_(std::move(extra_noise)),
      design_label_(std::move(design_label)) {
  if (extra_noise_.size() == 0)
    extra_noise_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(gps_.size()));
  if (extra_noise_.size() != static_cast<Eigen::Index>(gps_.size()))
    throw std::invalid_argument("GpEmulator: extra_noise dimension mismatch");
}

Eigen::Index GpEmulator::input_dim() const {
  return gps_.empty() ? 0 : gps_.front().inputs().cols();
}

void GpEmulator::predict(const Eigen::VectorXd& theta, Eigen::VectorXd& mean,
                         Eigen::VectorXd& var) const {
  const Eigen::Index d = output_dim();
  mean.resize(d);
  var.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    gps_[static_cast<std::size_t>(i)].predict(theta, mean[i], var[i]);
    var[i] += extra_noise_[i];
  }
}

GpEmulator train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                 const Decorrelator& dec, const GpTrainConfig& cfg,
                 const Eigen::VectorXd& extra_noise,
                 const std::string& design_label) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index p = inputs.cols();
  if (outputs.rows() != n)
    throw std::invalid_argument("train: inputs/outputs row mismatch");
  if (n < 10)
    throw std::invalid_argument("train: need at least 10 training pairs");
  if (!outputs.allFinite() || !inputs.allFinite())
    throw std::invalid_argument("train: non-finite training data");
  if (outputs.cols() != dec.output_dim())
    throw std::invalid_argument("train: outputs do not match decorrelator");

  const auto cond_idx = stride_subset(n, cfg.max_train_points);
  const auto opt_idx = stride_subset(n, cfg.opt_subset);
  const Eigen::MatrixXd x_cond = take_rows(inputs, cond_idx);
  const Eigen::MatrixXd x_opt = take_rows(inputs, opt_idx);

  // Data scales anchoring the hyperparameter search box.
  Eigen::VectorXd input_sd(p);
  for (Eigen::Index d = 0; d < p; ++d) {
    const double m = inputs.col(d).mean();
    const double v =
        (inputs.col(d).array() - m).square().sum() / std::max<double>(1, n - 1);
    input_sd[d] = v > 0.0 ? std::sqrt(v) : 1.0;
  }

  std::vector<ScalarGp> gps(static_cast<std::size_t>(outputs.cols()));
  for (Eigen::Index dim = 0; dim < outputs.cols(); ++dim) {
    const Eigen::VectorXd y_cond = [&] {
      Eigen::VectorXd y(static_cast<Eigen::Index>(cond_idx.size()));
      for (std::size_t i = 0; i < cond_idx.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = outputs(cond_idx[i], dim);
      return y;
    }();
    const Eigen::VectorXd y_opt = [&] {
      Eigen::VectorXd y(static_cast<Eigen::Index>(opt_idx.size()));
      for (std::size_t i = 0; i < opt_idx.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = outputs(opt_idx[i], dim);
      return y;
    }();
    const double ym = y_opt.mean();
    const double yv = (y_opt.array() - ym).square().sum() /
                      std::max<double>(1, y_opt.size() - 1);
    const double out_scale = yv > 0.0 ? yv : 1.0;

    auto objective = [&](const Eigen::VectorXd& z) {
      if (z.cwiseAbs().maxCoeff() > kLogClamp)
        return std::numeric_limits<double>::infinity();
      const GpHyper h = unpack_log(z, p);
      const double lml = ScalarGp::log_marginal_likelihood(
          x_opt, y_opt, h, cfg.nugget_floor_rel);
      return -lml;
    };

    Rng rng(derive_seed(cfg.seed, {stream::kGp, static_cast<std::uint64_t>(dim)}));
    std::uniform_real_distribution<double> log10_factor(-2.0, 2.0);
    Eigen::VectorXd best_z;
    double best_value = std::numeric_limits<double>::infinity();
    for (int s = 0; s < cfg.n_starts; ++s) {
      Eigen::VectorXd z(p + 2);
      for (Eigen::Index d = 0; d < p; ++d)
        z[d] = std::log(input_sd[d]) + log10_factor(rng) * std::log(10.0);
      z[p] = std::log(out_scale) + log10_factor(rng) * std::log(10.0);
      z[p + 1] = std::log(out_scale) + log10_factor(rng) * std::log(10.0);

      const NelderMeadResult res = minimize_nelder_mead(
          objective, z, Eigen::VectorXd::Constant(p + 2, 1.0),
          cfg.opt_max_evals);
      // The simplex only ever improves on its own start, so taking the best
      // run keeps the returned likelihood above every initialization.
      if (res.value < best_value) {
        best_value = res.value;
        best_z = res.x;
      }
    }
    if (!best_z.size())
      throw std::runtime_error("train: all hyperparameter starts failed");

    gps[static_cast<std::size_t>(dim)] = ScalarGp::condition(
        x_cond, y_cond, unpack_log(best_z, p), cfg.nugget_floor_rel);
  }

  return GpEmulator(dec, std::move(gps), extra_noise, design_label);
}

// --- serialization ---------------------------------------------------------

namespace {

nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::ordered_json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols =
      rows == 0 ? 0 : static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jj = 0; jj < cols; ++jj)
      m(i, jj) = j.at(static_cast<std::size_t>(i))
                     .at(static_cast<std::size_t>(jj))
                     .get<double>();
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::ordered_json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

nlohmann::ordered_json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

struct GpEmulatorIo {
  static nlohmann::ordered_json gp_to_json(const ScalarGp& gp) {
    nlohmann::ordered_json j;
    j["inputs"] = matrix_to_json(gp.x_);
    j["targets_centered"] = vector_to_json(gp.y_);
    j["target_mean"] = gp.y_mean_;
    j["lengthscales"] = vector_to_json(gp.hyper_.lengthscales);
    j["signal_var"] = gp.hyper_.signal_var;
    j["nugget"] = gp.hyper_.nugget;
    return j;
  }
  // Rebuilds the factorization from the stored centered targets, so the
  // deserialized predictor is bit-identical to the original.
  static ScalarGp gp_from_json(const nlohmann::ordered_json& j) {
    ScalarGp gp;
    gp.x_ = matrix_from_json(j.at("inputs"));
    gp.y_ = vector_from_json(j.at("targets_centered"));
    gp.y_mean_ = j.at("target_mean").get<double>();
    gp.hyper_.lengthscales = vector_from_json(j.at("lengthscales"));
    gp.hyper_.signal_var = j.at("signal_var").get<double>();
    gp.hyper_.nugget = j.at("nugget").get<double>();
    if (!gp.hyper_.valid() || gp.x_.rows() != gp.y_.size())
      throw std::invalid_argument("GpEmulator: malformed scalar GP artifact");
    Eigen::MatrixXd k = kernel_matrix(gp.x_, gp.hyper_);
    k.diagonal().array() += gp.hyper_.nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("GpEmulator: stored kernel not factorizable");
    gp.chol_l_ = llt.matrixL();
    gp.alpha_ = llt.solve(gp.y_);
    gp.lml_ = lml_from_factor(llt, gp.y_);
    return gp;
  }
};

nlohmann::ordered_json GpEmulator::to_json() const {
  nlohmann::ordered_json j;
  j["design_label"] = design_label_;
  j["decorrelator"]["basis"] = matrix_to_json(dec_.basis());
  j["decorrelator"]["scale"] = vector_to_json(dec_.scale());
  j["extra_noise"] = vector_to_json(extra_noise_);
  j["gps"] = nlohmann::ordered_json::array();
  for (const auto& gp : gps_) j["gps"].push_back(GpEmulatorIo::gp_to_json(gp));
  return j;
}

GpEmulator GpEmulator::from_json(const nlohmann::ordered_json& j) {
  GpEmulator em;
  em.design_label_ = j.at("design_label").get<std::string>();
  em.dec_ = Decorrelator::from_parts(
      matrix_from_json(j.at("decorrelator").at("basis")),
      vector_from_json(j.at("decorrelator").at("scale")));
  em.extra_noise_ = vector_from_json(j.at("extra_noise"));
  for (const auto& gj : j.at("gps"))
    em.gps_.push_back(GpEmulatorIo::gp_from_json(gj));
  if (em.extra_noise_.size() != static_cast<Eigen::Index>(em.gps_.size()))
    throw std::invalid_argument("GpEmulator::from_json: dimension mismatch");
  return em;
}

}  // namespace tuq
