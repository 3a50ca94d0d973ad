#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tuq/covariance.hpp"
#include "tuq/eki.hpp"
#include "tuq/mcmc.hpp"
#include "tuq/pipeline.hpp"

namespace tuq {

/// CSV with an optional header row; doubles are written with max_digits10
/// precision so values round-trip exactly.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {});
Eigen::MatrixXd read_matrix_csv(const std::string& path,
                                std::vector<std::string>* header = nullptr);

void save_covariance_json(const std::string& path, const CovarianceMatrix& s);
CovarianceMatrix load_covariance_json(const std::string& path);

/// Columns: theta columns, then output columns, then the iteration tag.
void write_training_set_csv(const std::string& path, const TrainingSet& ts,
                            Eigen::Index param_dim = 2);
TrainingSet read_training_set_csv(const std::string& path,
                                  Eigen::Index param_dim = 2);

/// Columns: design_id, latitude, season, log_utility.
void write_utility_table_csv(const std::string& path,
                             const UtilityTable& table);
UtilityTable read_utility_table_csv(const std::string& path);

void write_posterior_csv(const std::string& path,
                         const PosteriorSampleSet& ps);
void write_chain_diagnostics_json(const std::string& path,
                                  const PosteriorSampleSet& ps);

}  // namespace tuq
