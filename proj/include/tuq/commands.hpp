#pragma once

#include <string>

#include "tuq/config.hpp"

namespace tuq {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kNumerical = 2;
}  // namespace exit_code

/// Control run and covariance estimation; writes control_samples.csv and
/// covariance.json. `at_truth` switches the parameters from the prior mean
/// to the configured ground truth.
int cmd_control(const PipelineConfig& cfg, bool at_truth);

/// Stage 1 over the configured design space; writes utility_table.csv,
/// per-design posterior CSVs with diagnostics sidecars, training_set.csv and
/// design_summary.json. With `with_oracle`, also runs the grid-quadrature
/// reference and reports the Spearman rank correlation.
int cmd_design(const PipelineConfig& cfg, int design_limit, bool with_oracle);

/// Stage 2 at one design (flat id from the utility table); writes
/// uq_posterior.csv, uq_emulator.json and uq_summary.json.
int cmd_uq(const PipelineConfig& cfg, int design_id);

/// Post-processing: utility-vs-latitude series and KDE density grids for the
/// result files found in `results_dir`.
int cmd_report(const std::string& results_dir, const std::string& out_dir);

}  // namespace tuq
