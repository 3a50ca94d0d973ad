#include "tuq/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "tuq/io.hpp"
#include "tuq/pipeline.hpp"
#include "tuq/rng.hpp"
#include "tuq/stats.hpp"

namespace tuq {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

fs::path prepare_output(const PipelineConfig& cfg) {
  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  save_config_file(cfg, (dir / "effective_config.json").string());
  return dir;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Json j;
  in >> j;
  return j;
}

}  // namespace

int cmd_control(const PipelineConfig& cfg, bool at_truth) {
  const fs::path dir = prepare_output(cfg);
  const auto model = make_model(cfg.model);
  const GaussianPrior prior = build_prior(cfg.prior);
  const Eigen::VectorXd theta =
      at_truth ? Eigen::VectorXd(truth_theta(cfg.truth)) : prior.mean;

  const Eigen::MatrixXd samples =
      model->run_control(theta, cfg.control.n_windows, cfg.control.n_spinup,
                         derive_seed(cfg.seed, {stream::kControl, at_truth ? 1u : 0u}));
  write_matrix_csv((dir / "control_samples.csv").string(), samples);
  if (samples.rows() >= 2) {
    save_covariance_json((dir / "covariance.json").string(),
                         estimate_covariance(samples));
  } else {
    std::cout << "control: single retained window, covariance not estimated\n";
  }

  std::cout << "control: " << samples.rows() << " windows x " << samples.cols()
            << " statistics at " << (at_truth ? "truth" : "prior mean")
            << " -> " << dir.string() << "\n";
  return exit_code::kOk;
}

int cmd_design(const PipelineConfig& cfg, int design_limit, bool with_oracle) {
  const fs::path dir = prepare_output(cfg);
  const auto model = make_model(cfg.model);
  const GaussianPrior prior = build_prior(cfg.prior);
  const DesignSpace ds = design_space_for(*model, cfg.stencil);

  std::vector<Restriction> designs = enumerate_designs(ds);
  if (design_limit > 0 &&
      design_limit < static_cast<int>(designs.size()))
    designs.resize(static_cast<std::size_t>(design_limit));

  const DesignStageResult result =
      design_stage(*model, prior, designs, cfg, cfg.seed, &ds);

  write_utility_table_csv((dir / "utility_table.csv").string(), result.table);
  write_training_set_csv((dir / "training_set.csv").string(), result.training,
                         prior.dim());
  for (std::size_t i = 0; i < result.table.rows.size(); ++i) {
    if (!result.table.rows[i].ok) continue;
    const std::string label = result.table.rows[i].id.label();
    write_posterior_csv((dir / ("posterior_" + label + ".csv")).string(),
                        result.posteriors[i]);
    write_chain_diagnostics_json(
        (dir / ("posterior_" + label + "_diag.json")).string(),
        result.posteriors[i]);
  }

  Json summary;
  summary["n_designs"] = result.table.rows.size();
  summary["forward_evals"] = result.forward_evals;
  int n_failed = 0;
  for (const UtilityRow& r : result.table.rows)
    if (!r.ok) ++n_failed;
  summary["n_failed"] = n_failed;
  if (result.table.argmax >= 0) {
    const UtilityRow& best = result.table.best();
    summary["argmax"]["design_id"] = best.id.flat;
    summary["argmax"]["label"] = best.id.label();
    summary["argmax"]["latitude"] = best.latitude_deg;
    summary["argmax"]["season"] = best.id.season;
    summary["argmax"]["log_utility"] = best.log_utility;
  }

  if (with_oracle) {
    const UtilityTable oracle = oracle_utility_table(
        *model, designs, result.data, CovarianceMatrix(result.sigma), prior,
        GridConfig{}, cfg.parallelism, &ds);
    write_utility_table_csv((dir / "oracle_table.csv").string(), oracle);
    std::vector<double> lu_pipeline, lu_oracle;
    for (std::size_t i = 0; i < oracle.rows.size(); ++i)
      if (oracle.rows[i].ok && result.table.rows[i].ok) {
        lu_pipeline.push_back(result.table.rows[i].log_utility);
        lu_oracle.push_back(oracle.rows[i].log_utility);
      }
    summary["oracle"]["spearman"] =
        spearman_rank_correlation(lu_pipeline, lu_oracle);
    if (oracle.argmax >= 0) {
      summary["oracle"]["argmax_design_id"] = oracle.best().id.flat;
      summary["oracle"]["argmax_latitude"] = oracle.best().latitude_deg;
    }
  }

  write_json(dir / "design_summary.json", summary);

  if (result.table.argmax < 0) {
    std::cerr << "design: no valid design (all chains degenerate)\n";
    return exit_code::kNumerical;
  }
  const UtilityRow& best = result.table.best();
  std::cout << "design: " << result.table.rows.size() << " designs, argmax "
            << best.id.label() << " (latitude " << best.latitude_deg
            << " deg, log U " << best.log_utility << "), "
            << result.forward_evals << " forward evaluations -> "
            << dir.string() << "\n";
  if (with_oracle)
    std::cout << "design: oracle Spearman rho = "
              << summary["oracle"]["spearman"].get<double>() << "\n";
  return exit_code::kOk;
}

int cmd_uq(const PipelineConfig& cfg, int design_id) {
  const fs::path dir = prepare_output(cfg);
  const auto model = make_model(cfg.model);
  const GaussianPrior prior = build_prior(cfg.prior);
  const DesignSpace ds = design_space_for(*model, cfg.stencil);

  const std::vector<Restriction> designs = enumerate_designs(ds);
  const Restriction* chosen = nullptr;
  for (const Restriction& w : designs)
    if (w.id.flat == design_id) chosen = &w;
  if (!chosen)
    throw ConfigError("uq: unknown design id " + std::to_string(design_id) +
                      " (valid: 1.." + std::to_string(designs.size()) + ")");

  const Eigen::Vector2d theta_dagger = truth_theta(cfg.truth);
  const UqResult result =
      uq_stage(*model, *chosen, theta_dagger, prior, cfg, cfg.seed);

  write_posterior_csv((dir / "uq_posterior.csv").string(), result.samples);
  write_chain_diagnostics_json((dir / "uq_diag.json").string(),
                               result.samples);
  write_json(dir / "uq_emulator.json", result.emulator.to_json());

  const Eigen::VectorXd mean = result.samples.samples.colwise().mean();
  const bool hdr99 = hdr_contains(result.samples.samples, theta_dagger, 0.99);

  Json summary;
  summary["design_id"] = chosen->id.flat;
  summary["label"] = chosen->id.label();
  summary["latitude"] = design_center_latitude(ds, *chosen);
  summary["season"] = chosen->id.season;
  summary["posterior_mean"] = vector_json(mean);
  summary["posterior_covariance"] = matrix_json(result.posterior_covariance);
  summary["logdet_cov"] = result.logdet_cov;
  summary["log_utility"] = result.log_utility;
  summary["truth_theta"] = vector_json(theta_dagger);
  summary["truth_in_hdr99"] = hdr99;
  summary["acceptance_rate"] = result.samples.acceptance_rate;
  summary["replicate_cov_rel_diff"] = result.replicate_cov_rel_diff;
  summary["seed"] = cfg.seed;
  write_json(dir / "uq_summary.json", summary);

  std::cout << "uq: design " << chosen->id.label() << ", log U "
            << result.log_utility << ", truth in 99% HDR: "
            << (hdr99 ? "yes" : "no") << " -> " << dir.string() << "\n";
  return exit_code::kOk;
}

namespace {

/// KDE density on a 201x201 grid covering the samples with a margin wide
/// enough that the grid carries essentially all of the mass.
void write_density_grid(const fs::path& in_csv, const fs::path& out_csv,
                        double& integral) {
  const Eigen::MatrixXd samples = read_matrix_csv(in_csv.string());
  const Kde2d kde = Kde2d::fit(samples);
  const int n = 201;
  Eigen::Vector2d lo, hi;
  for (int d = 0; d < 2; ++d) {
    lo[d] = samples.col(d).minCoeff() - 6.0 * kde.bandwidth()[d];
    hi[d] = samples.col(d).maxCoeff() + 6.0 * kde.bandwidth()[d];
  }
  const Eigen::VectorXd ax1 = Eigen::VectorXd::LinSpaced(n, lo[0], hi[0]);
  const Eigen::VectorXd ax2 = Eigen::VectorXd::LinSpaced(n, lo[1], hi[1]);

  Eigen::MatrixXd rows(n * n, 3);
  integral = 0.0;
  const double h1 = ax1[1] - ax1[0], h2 = ax2[1] - ax2[0];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double dens = kde(Eigen::Vector2d(ax1[i], ax2[j]));
      rows.row(i * n + j) << ax1[i], ax2[j], dens;
      const double w1 = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      const double w2 = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      integral += w1 * w2 * dens;
    }
  integral *= h1 * h2;
  write_matrix_csv(out_csv.string(), rows, {"theta1", "theta2", "density"});
}

}  // namespace

int cmd_report(const std::string& results_dir, const std::string& out_dir) {
  const fs::path in(results_dir);
  const fs::path out(out_dir.empty() ? results_dir : out_dir);
  fs::create_directories(out);

  Json summary;
  bool found_anything = false;

  if (fs::exists(in / "utility_table.csv")) {
    const UtilityTable table =
        read_utility_table_csv((in / "utility_table.csv").string());
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(table.rows.size()), 4);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const UtilityRow& r = table.rows[static_cast<std::size_t>(i)];
      rows.row(i) << r.id.flat, r.latitude_deg, r.id.season, r.log_utility;
    }
    write_matrix_csv((out / "report_utility.csv").string(), rows,
                     {"design_id", "latitude", "season", "log_utility"});
    summary["utility_rows"] = rows.rows();
    found_anything = true;
  }

  std::vector<fs::path> density_sources;
  if (fs::exists(in / "design_summary.json")) {
    const Json ds = read_json(in / "design_summary.json");
    if (ds.contains("argmax")) {
      const fs::path p =
          in / ("posterior_" + ds["argmax"]["label"].get<std::string>() +
                ".csv");
      if (fs::exists(p)) density_sources.push_back(p);
    }
  }
  if (fs::exists(in / "uq_posterior.csv"))
    density_sources.push_back(in / "uq_posterior.csv");

  summary["densities"] = Json::array();
  for (const fs::path& src : density_sources) {
    const std::string stem = src.stem().string();
    const fs::path dst = out / ("report_density_" + stem + ".csv");
    double integral = 0.0;
    write_density_grid(src, dst, integral);
    Json entry;
    entry["source"] = src.filename().string();
    entry["file"] = dst.filename().string();
    entry["integral"] = integral;
    summary["densities"].push_back(entry);
    found_anything = true;
  }

  if (!found_anything)
    throw ConfigError("report: no result files found in " + in.string());

  write_json(out / "report_summary.json", summary);
  std::cout << "report: wrote " << summary["densities"].size()
            << " density grids -> " << out.string() << "\n";
  return exit_code::kOk;
}

}  // namespace tuq
