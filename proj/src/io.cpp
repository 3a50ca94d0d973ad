#include "tuq/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tuq {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("io: cannot write " + path);
  out << std::setprecision(17);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("io: cannot read " + path);
  return in;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header) {
  std::ofstream out = open_out(path);
  if (!header.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i)
      out << (i ? "," : "") << header[i];
    out << "\n";
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << (j ? "," : "") << m(i, j);
    out << "\n";
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path,
                                std::vector<std::string>* header) {
  std::ifstream in = open_in(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (first) {
      first = false;
      // A non-numeric first line is a header.
      char* end = nullptr;
      std::strtod(fields.front().c_str(), &end);
      if (end == fields.front().c_str()) {
        if (header) *header = fields;
        continue;
      }
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j)
      row[j] = std::stod(fields[j]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (rows[static_cast<std::size_t>(i)].size() !=
        static_cast<std::size_t>(m.cols()))
      throw std::runtime_error("io: ragged CSV in " + path);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

void save_covariance_json(const std::string& path, const CovarianceMatrix& s) {
  nlohmann::ordered_json j;
  j["dim"] = s.dim();
  j["matrix"] = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < s.dim(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index jj = 0; jj < s.dim(); ++jj)
      row.push_back(s.matrix()(i, jj));
    j["matrix"].push_back(std::move(row));
  }
  open_out(path) << j.dump(2) << "\n";
}

CovarianceMatrix load_covariance_json(const std::string& path) {
  nlohmann::ordered_json j;
  open_in(path) >> j;
  const auto dim = j.at("dim").get<Eigen::Index>();
  Eigen::MatrixXd m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index jj = 0; jj < dim; ++jj)
      m(i, jj) = j.at("matrix")[static_cast<std::size_t>(i)]
                               [static_cast<std::size_t>(jj)]
                     .get<double>();
  return CovarianceMatrix(std::move(m));
}

void write_training_set_csv(const std::string& path, const TrainingSet& ts,
                            Eigen::Index param_dim) {
  std::vector<std::string> header;
  for (Eigen::Index i = 0; i < param_dim; ++i)
    header.push_back("theta" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < ts.outputs.cols(); ++i)
    header.push_back("g" + std::to_string(i + 1));
  header.push_back("iteration");

  Eigen::MatrixXd m(ts.size(), param_dim + ts.outputs.cols() + 1);
  m.leftCols(param_dim) = ts.thetas;
  m.middleCols(param_dim, ts.outputs.cols()) = ts.outputs;
  m.rightCols(1) = ts.iteration.cast<double>();
  write_matrix_csv(path, m, header);
}

TrainingSet read_training_set_csv(const std::string& path,
                                  Eigen::Index param_dim) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.cols() < param_dim + 2)
    throw std::runtime_error("io: malformed training set in " + path);
  TrainingSet ts;
  ts.thetas = m.leftCols(param_dim);
  ts.outputs = m.middleCols(param_dim, m.cols() - param_dim - 1);
  ts.iteration = m.rightCols(1).cast<int>();
  return ts;
}

void write_utility_table_csv(const std::string& path,
                             const UtilityTable& table) {
  std::ofstream out = open_out(path);
  out << "design_id,latitude,season,log_utility\n";
  for (const UtilityRow& r : table.rows) {
    out << r.id.flat << "," << r.latitude_deg << "," << r.id.season << ",";
    if (r.ok) out << r.log_utility;
    else out << "nan";
    out << "\n";
  }
}

UtilityTable read_utility_table_csv(const std::string& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  UtilityTable table;
  table.rows.resize(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    UtilityRow& r = table.rows[static_cast<std::size_t>(i)];
    r.id.flat = static_cast<int>(m(i, 0));
    r.latitude_deg = m(i, 1);
    r.id.season = static_cast<int>(m(i, 2));
    r.log_utility = m(i, 3);
    r.logdet_cov = -r.log_utility;
    r.ok = std::isfinite(r.log_utility);
  }
  double best = -std::numeric_limits<double>::infinity();
  table.argmax = -1;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    if (table.rows[i].ok && table.rows[i].log_utility > best) {
      best = table.rows[i].log_utility;
      table.argmax = static_cast<int>(i);
    }
  return table;
}

void write_posterior_csv(const std::string& path,
                         const PosteriorSampleSet& ps) {
  std::vector<std::string> header;
  for (Eigen::Index i = 0; i < ps.samples.cols(); ++i)
    header.push_back("theta" + std::to_string(i + 1));
  write_matrix_csv(path, ps.samples, header);
}

void write_chain_diagnostics_json(const std::string& path,
                                  const PosteriorSampleSet& ps) {
  nlohmann::ordered_json j;
  j["design"] = ps.design_label;
  j["acceptance_rate"] = ps.acceptance_rate;
  j["final_step"] = ps.final_step;
  j["seed"] = ps.seed;
  j["n_retained"] = ps.size();
  j["step_trace"] = ps.step_trace;
  open_out(path) << j.dump(2) << "\n";
}

}  // namespace tuq
