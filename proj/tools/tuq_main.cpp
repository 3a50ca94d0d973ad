#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tuq/commands.hpp"
#include "tuq/forward_model.hpp"

namespace {

tuq::PipelineConfig resolve_config(const std::string& config_path,
                                   const std::optional<std::uint64_t>& seed,
                                   const std::optional<std::string>& out_dir,
                                   const std::optional<int>& parallelism,
                                   const std::optional<int>& stencil) {
  tuq::PipelineConfig cfg = config_path.empty()
                                ? tuq::default_config()
                                : tuq::load_config_file(config_path);
  // Precedence: config file < environment < command-line flags.
  if (const char* env = std::getenv("TUQ_OUTPUT_DIR")) cfg.output_dir = env;
  if (const char* env = std::getenv("TUQ_PARALLELISM"))
    cfg.parallelism = std::stoi(env);
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.output_dir = *out_dir;
  if (parallelism) cfg.parallelism = *parallelism;
  if (stencil) cfg.stencil = *stencil;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Targeted uncertainty quantification: ranks data-restriction designs by "
      "D-utility with a calibrate-emulate-sample pipeline, then quantifies "
      "parameter uncertainty at the chosen design."};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> parallelism;
  std::optional<int> stencil;
  app.add_option("-c,--config", config_path, "Pipeline config file (JSON)");
  app.add_option("--seed", seed, "Master seed override");
  app.add_option("-o,--output-dir", out_dir, "Output directory override");
  app.add_option("-j,--parallelism", parallelism,
                 "Worker limit override (0 = hardware)");
  app.add_option("--stencil", stencil, "Design stencil width override");

  auto* control = app.add_subcommand(
      "control", "Run control windows and estimate the covariance");
  bool at_truth = false;
  control->add_flag("--at-truth", at_truth,
                    "Run at the ground-truth parameters instead of the prior "
                    "mean");

  auto* design = app.add_subcommand(
      "design", "Stage 1: rank all designs by log D-utility");
  int design_limit = 0;
  bool with_oracle = false;
  design->add_option("--designs", design_limit,
                     "Restrict to the first N designs");
  design->add_flag("--oracle", with_oracle,
                   "Also run the grid-quadrature oracle and report the "
                   "Spearman rank correlation");

  auto* uq = app.add_subcommand(
      "uq", "Stage 2: full uncertainty quantification at one design");
  int design_id = -1;
  uq->add_option("--design-id", design_id,
                 "Design id from the utility table")
      ->required();

  auto* report =
      app.add_subcommand("report", "Emit plot data from result files");
  std::string results_dir = "out";
  std::string report_out;
  report->add_option("--results", results_dir, "Results directory");
  report->add_option("--out", report_out,
                     "Report output directory (defaults to the results "
                     "directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return tuq::exit_code::kUsage;
  }

  try {
    if (*control)
      return tuq::cmd_control(
          resolve_config(config_path, seed, out_dir, parallelism, stencil),
          at_truth);
    if (*design)
      return tuq::cmd_design(
          resolve_config(config_path, seed, out_dir, parallelism, stencil),
          design_limit, with_oracle);
    if (*uq)
      return tuq::cmd_uq(
          resolve_config(config_path, seed, out_dir, parallelism, stencil),
          design_id);
    if (*report) return tuq::cmd_report(results_dir, report_out);
  } catch (const tuq::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tuq::exit_code::kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tuq::exit_code::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tuq::exit_code::kNumerical;
  }
  return tuq::exit_code::kUsage;
}
