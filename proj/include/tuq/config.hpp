#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "tuq/analytic_model.hpp"
#include "tuq/eki.hpp"
#include "tuq/gp.hpp"
#include "tuq/lorenz96_model.hpp"
#include "tuq/mcmc.hpp"
#include "tuq/params.hpp"

namespace tuq {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
  std::string kind = "analytic-aquaplanet";
  SeasonMode mode = SeasonMode::kStationary;
  double window_days = 30.0;
  AnalyticConfig analytic;
  Lorenz96Config lorenz96;
};

struct ControlConfig {
  int n_windows = 650;
  int n_spinup = 50;
};

struct ObsNoiseConfig {
  double c = 0.2;
  double c_max = 0.1;
};

/// Ground-truth physical parameters used to generate synthetic data.
struct TruthConfig {
  double rh = 0.7;
  double tau_s = 7200.0;
};

/// Everything one pipeline run needs; all randomness flows from `seed`.
struct PipelineConfig {
  std::uint64_t seed = 20260811;
  int parallelism = 0;  ///< 0 = hardware concurrency
  std::string output_dir = "out";
  ModelConfig model;
  PriorConfig prior;
  int stencil = 3;
  CalibrationConfig eki;
  GpTrainConfig gp;
  McmcConfig mcmc;
  int uq_replicates = 2;
  ObsNoiseConfig noise;
  ControlConfig control;
  TruthConfig truth;
};

/// Stationary analytic defaults (650 control windows of 30 days, 3-latitude
/// stencils).
PipelineConfig default_config();

/// Seasonal preset: 90-day windows stacked over 4 seasons, 150 control years
/// with 4 discarded, single-latitude designs.
PipelineConfig default_seasonal_config();

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);

/// Strict parse: unknown keys anywhere are rejected; missing keys keep their
/// defaults.
PipelineConfig config_from_json(const nlohmann::ordered_json& j);

PipelineConfig load_config_file(const std::string& path);
void save_config_file(const PipelineConfig& cfg, const std::string& path);

std::unique_ptr<ForwardModel> make_model(const ModelConfig& cfg);

Eigen::Vector2d truth_theta(const TruthConfig& cfg);

}  // namespace tuq
