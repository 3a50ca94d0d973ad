#include "tuq/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace tuq {

namespace {

using Json = nlohmann::ordered_json;

/// Reads known keys from a JSON object and rejects everything else.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ConfigError("config: " + path_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ConfigError("config: bad value for " + path_ + "." + key);
    }
  }

  bool has_child(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const Json& child(const char* key) const { return j_.at(key); }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw ConfigError("config: unknown key " + path_ + "." + item.key());
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string mode_to_string(SeasonMode m) {
  return m == SeasonMode::kSeasonal ? "seasonal" : "stationary";
}

SeasonMode mode_from_string(const std::string& s) {
  if (s == "stationary") return SeasonMode::kStationary;
  if (s == "seasonal") return SeasonMode::kSeasonal;
  throw ConfigError("config: unknown mode '" + s + "'");
}

void parse_analytic(const Json& j, AnalyticConfig& a) {
  StrictObject o(j, "model.analytic");
  o.get("n_lat", a.n_lat);
  o.get("itcz_width_deg", a.itcz_width_deg);
  double shift = a.seasonal_centers_deg[1];
  o.get("seasonal_shift_deg", shift);
  a.seasonal_centers_deg = {0.0, shift, 0.0, -shift};
  o.get("rh_background", a.rh_background);
  o.get("precip_base_mm_day", a.precip_base_mm_day);
  o.get("precip_rh_gain_mm_day", a.precip_rh_gain_mm_day);
  o.get("precip_background_mm_day", a.precip_background_mm_day);
  o.get("precip_tau_scale_s", a.precip_tau_scale_s);
  o.get("exceed_tau_ref_s", a.exceed_tau_ref_s);
  o.get("exceed_slope", a.exceed_slope);
  o.get("exceed_amplitude", a.exceed_amplitude);
  o.get("exceed_offset", a.exceed_offset);
  o.get("noise_corr_length_deg", a.noise_corr_length_deg);
  o.get("noise_marginal_frac", a.noise_marginal_frac);
  o.get("noise_ref_rh", a.noise_ref_params.rh);
  o.get("noise_ref_tau_s", a.noise_ref_params.tau_s);
  o.finish();
}

void parse_lorenz96(const Json& j, Lorenz96Config& l) {
  StrictObject o(j, "model.lorenz96");
  o.get("n_sites", l.n_sites);
  o.get("n_fast_per_site", l.n_fast_per_site);
  o.get("c", l.c);
  o.get("b", l.b);
  o.get("forcing_at_prior_mean", l.forcing_at_prior_mean);
  o.get("coupling_at_prior_mean", l.coupling_at_prior_mean);
  o.get("forcing_scale", l.forcing_scale);
  o.get("coupling_scale", l.coupling_scale);
  o.get("theta2_ref", l.theta2_ref);
  o.get("dt", l.dt);
  o.get("mtu_per_day", l.mtu_per_day);
  o.get("spinup_days", l.spinup_days);
  o.get("percentile_run_days", l.percentile_run_days);
  o.get("exceedance_quantile", l.exceedance_quantile);
  o.finish();
}

Json analytic_to_json(const AnalyticConfig& a) {
  Json j;
  j["n_lat"] = a.n_lat;
  j["itcz_width_deg"] = a.itcz_width_deg;
  j["seasonal_shift_deg"] = a.seasonal_centers_deg[1];
  j["rh_background"] = a.rh_background;
  j["precip_base_mm_day"] = a.precip_base_mm_day;
  j["precip_rh_gain_mm_day"] = a.precip_rh_gain_mm_day;
  j["precip_background_mm_day"] = a.precip_background_mm_day;
  j["precip_tau_scale_s"] = a.precip_tau_scale_s;
  j["exceed_tau_ref_s"] = a.exceed_tau_ref_s;
  j["exceed_slope"] = a.exceed_slope;
  j["exceed_amplitude"] = a.exceed_amplitude;
  j["exceed_offset"] = a.exceed_offset;
  j["noise_corr_length_deg"] = a.noise_corr_length_deg;
  j["noise_marginal_frac"] = a.noise_marginal_frac;
  j["noise_ref_rh"] = a.noise_ref_params.rh;
  j["noise_ref_tau_s"] = a.noise_ref_params.tau_s;
  return j;
}

Json lorenz96_to_json(const Lorenz96Config& l) {
  Json j;
  j["n_sites"] = l.n_sites;
  j["n_fast_per_site"] = l.n_fast_per_site;
  j["c"] = l.c;
  j["b"] = l.b;
  j["forcing_at_prior_mean"] = l.forcing_at_prior_mean;
  j["coupling_at_prior_mean"] = l.coupling_at_prior_mean;
  j["forcing_scale"] = l.forcing_scale;
  j["coupling_scale"] = l.coupling_scale;
  j["theta2_ref"] = l.theta2_ref;
  j["dt"] = l.dt;
  j["mtu_per_day"] = l.mtu_per_day;
  j["spinup_days"] = l.spinup_days;
  j["percentile_run_days"] = l.percentile_run_days;
  j["exceedance_quantile"] = l.exceedance_quantile;
  return j;
}

}  // namespace

PipelineConfig default_config() { return PipelineConfig{}; }

PipelineConfig default_seasonal_config() {
  PipelineConfig cfg;
  cfg.model.mode = SeasonMode::kSeasonal;
  cfg.model.window_days = 90.0;
  cfg.stencil = 1;
  cfg.control.n_windows = 150;  // stacked years
  cfg.control.n_spinup = 4;
  return cfg;
}

Json config_to_json(const PipelineConfig& cfg) {
  Json j;
  j["seed"] = cfg.seed;
  j["parallelism"] = cfg.parallelism;
  j["output_dir"] = cfg.output_dir;
  j["model"]["kind"] = cfg.model.kind;
  j["model"]["mode"] = mode_to_string(cfg.model.mode);
  j["model"]["window_days"] = cfg.model.window_days;
  j["model"]["analytic"] = analytic_to_json(cfg.model.analytic);
  j["model"]["lorenz96"] = lorenz96_to_json(cfg.model.lorenz96);
  j["prior"]["theta1_mean"] = cfg.prior.theta1_mean;
  j["prior"]["theta1_var"] = cfg.prior.theta1_var;
  j["prior"]["theta2_mean"] = cfg.prior.theta2_mean;
  j["prior"]["theta2_var"] = cfg.prior.theta2_var;
  j["design_space"]["stencil"] = cfg.stencil;
  j["eki"]["ensemble_size"] = cfg.eki.ensemble_size;
  j["eki"]["n_iterations"] = cfg.eki.n_iterations;
  j["gp"]["n_starts"] = cfg.gp.n_starts;
  j["gp"]["nugget_floor_rel"] = cfg.gp.nugget_floor_rel;
  j["gp"]["max_train_points"] = cfg.gp.max_train_points;
  j["gp"]["opt_subset"] = cfg.gp.opt_subset;
  j["gp"]["opt_max_evals"] = cfg.gp.opt_max_evals;
  j["mcmc"]["n_samples"] = cfg.mcmc.n_samples;
  j["mcmc"]["burn_fraction"] = cfg.mcmc.burn_fraction;
  j["mcmc"]["thinning"] = cfg.mcmc.thinning;
  j["mcmc"]["target_acceptance"] = cfg.mcmc.target_acceptance;
  j["mcmc"]["init_step"] = cfg.mcmc.init_step;
  j["mcmc"]["adapt"] = cfg.mcmc.adapt;
  j["mcmc"]["uq_replicates"] = cfg.uq_replicates;
  j["noise"]["c"] = cfg.noise.c;
  j["noise"]["c_max"] = cfg.noise.c_max;
  j["control"]["n_windows"] = cfg.control.n_windows;
  j["control"]["n_spinup"] = cfg.control.n_spinup;
  j["truth"]["rh"] = cfg.truth.rh;
  j["truth"]["tau_s"] = cfg.truth.tau_s;
  return j;
}

PipelineConfig config_from_json(const Json& j) {
  PipelineConfig cfg;
  StrictObject root(j, "<root>");
  root.get("seed", cfg.seed);
  root.get("parallelism", cfg.parallelism);
  root.get("output_dir", cfg.output_dir);

  if (root.has_child("model")) {
    StrictObject m(root.child("model"), "model");
    m.get("kind", cfg.model.kind);
    std::string mode = mode_to_string(cfg.model.mode);
    m.get("mode", mode);
    cfg.model.mode = mode_from_string(mode);
    m.get("window_days", cfg.model.window_days);
    if (m.has_child("analytic")) parse_analytic(m.child("analytic"), cfg.model.analytic);
    if (m.has_child("lorenz96")) parse_lorenz96(m.child("lorenz96"), cfg.model.lorenz96);
    m.finish();
  }
  if (root.has_child("prior")) {
    StrictObject p(root.child("prior"), "prior");
    p.get("theta1_mean", cfg.prior.theta1_mean);
    p.get("theta1_var", cfg.prior.theta1_var);
    p.get("theta2_mean", cfg.prior.theta2_mean);
    p.get("theta2_var", cfg.prior.theta2_var);
    p.finish();
  }
  if (root.has_child("design_space")) {
    StrictObject d(root.child("design_space"), "design_space");
    d.get("stencil", cfg.stencil);
    d.finish();
  }
  if (root.has_child("eki")) {
    StrictObject e(root.child("eki"), "eki");
    e.get("ensemble_size", cfg.eki.ensemble_size);
    e.get("n_iterations", cfg.eki.n_iterations);
    e.finish();
  }
  if (root.has_child("gp")) {
    StrictObject g(root.child("gp"), "gp");
    g.get("n_starts", cfg.gp.n_starts);
    g.get("nugget_floor_rel", cfg.gp.nugget_floor_rel);
    g.get("max_train_points", cfg.gp.max_train_points);
    g.get("opt_subset", cfg.gp.opt_subset);
    g.get("opt_max_evals", cfg.gp.opt_max_evals);
    g.finish();
  }
  if (root.has_child("mcmc")) {
    StrictObject m(root.child("mcmc"), "mcmc");
    m.get("n_samples", cfg.mcmc.n_samples);
    m.get("burn_fraction", cfg.mcmc.burn_fraction);
    m.get("thinning", cfg.mcmc.thinning);
    m.get("target_acceptance", cfg.mcmc.target_acceptance);
    m.get("init_step", cfg.mcmc.init_step);
    m.get("adapt", cfg.mcmc.adapt);
    m.get("uq_replicates", cfg.uq_replicates);
    m.finish();
  }
  if (root.has_child("noise")) {
    StrictObject n(root.child("noise"), "noise");
    n.get("c", cfg.noise.c);
    n.get("c_max", cfg.noise.c_max);
    n.finish();
  }
  if (root.has_child("control")) {
    StrictObject c(root.child("control"), "control");
    c.get("n_windows", cfg.control.n_windows);
    c.get("n_spinup", cfg.control.n_spinup);
    c.finish();
  }
  if (root.has_child("truth")) {
    StrictObject t(root.child("truth"), "truth");
    t.get("rh", cfg.truth.rh);
    t.get("tau_s", cfg.truth.tau_s);
    t.finish();
  }
  root.finish();

  if (cfg.stencil < 1) throw ConfigError("config: stencil must be >= 1");
  if (cfg.control.n_windows <= cfg.control.n_spinup)
    throw ConfigError("config: control.n_windows must exceed n_spinup");
  if (cfg.model.kind != "analytic-aquaplanet" &&
      cfg.model.kind != "lorenz96-two-scale")
    throw ConfigError("config: unknown model kind '" + cfg.model.kind + "'");
  if (cfg.model.kind == "lorenz96-two-scale" &&
      cfg.model.mode == SeasonMode::kSeasonal)
    throw ConfigError("config: lorenz96 model has no seasonal mode");
  if (!(cfg.noise.c > 0.0) || !(cfg.noise.c_max > 0.0))
    throw ConfigError("config: noise factors must be positive");
  return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError("config: parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config_file(const PipelineConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << config_to_json(cfg).dump(2) << "\n";
}

std::unique_ptr<ForwardModel> make_model(const ModelConfig& cfg) {
  if (cfg.kind == "analytic-aquaplanet") {
    AnalyticConfig a = cfg.analytic;
    a.mode = cfg.mode;
    a.window_days = cfg.window_days;
    return std::make_unique<AnalyticAquaplanet>(a);
  }
  if (cfg.kind == "lorenz96-two-scale") {
    if (cfg.mode == SeasonMode::kSeasonal)
      throw ConfigError("make_model: lorenz96 model has no seasonal mode");
    Lorenz96Config l = cfg.lorenz96;
    l.window_days = cfg.window_days;
    return std::make_unique<TwoScaleLorenz96>(l);
  }
  throw ConfigError("make_model: unknown model kind '" + cfg.kind + "'");
}

Eigen::Vector2d truth_theta(const TruthConfig& cfg) {
  return transform_forward(PhysicalParams{cfg.rh, cfg.tau_s}).theta;
}

}  // namespace tuq
