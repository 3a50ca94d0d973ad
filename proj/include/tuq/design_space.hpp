#pragma once

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tuq/covariance.hpp"

namespace tuq {

enum class SeasonMode { kStationary, kSeasonal };

inline const char* season_name(int season) {
  switch (season) {
    case 0: return "spring";
    case 1: return "summer";
    case 2: return "autumn";
    case 3: return "winter";
    default: return "stationary";
  }
}

/// The discrete space of candidate data restrictions: stencils of `stencil`
/// consecutive latitudes, optionally per season. Row layout of the full
/// statistics vector is season-major, then statistic-major blocks of n_lat
/// latitudes: index = season*(n_stats*n_lat) + stat*n_lat + lat.
struct DesignSpace {
  SeasonMode mode = SeasonMode::kStationary;
  int n_lat = 32;
  int stencil = 3;
  int n_stats = 3;

  int n_seasons() const { return mode == SeasonMode::kSeasonal ? 4 : 1; }
  int full_dim() const { return n_stats * n_lat * n_seasons(); }
  int designs_per_season() const { return n_lat - (stencil - 1); }
  int n_designs() const { return n_seasons() * designs_per_season(); }

  void validate() const {
    if (n_lat < 1 || n_stats < 1)
      throw std::invalid_argument("DesignSpace: n_lat and n_stats must be >= 1");
    if (stencil < 1 || stencil > n_lat)
      throw std::invalid_argument("DesignSpace: stencil must lie in [1, n_lat]");
  }
};

/// Identifies one design: a 1-based southmost latitude of the stencil, and a
/// season index (-1 in the stationary case). `flat` is the 1-based position
/// in enumeration order.
struct DesignId {
  int season = -1;
  int lat_start = 1;
  int flat = 1;

  std::string label() const {
    if (season < 0) return "k" + std::to_string(lat_start);
    return "s" + std::to_string(season) + "_k" + std::to_string(lat_start);
  }
};

/// Row-selection operator W_k: picks `rows` of the full statistics vector,
/// order preserving.
struct Restriction {
  DesignId id;
  std::vector<Eigen::Index> rows;

  Eigen::Index out_dim() const {
    return static_cast<Eigen::Index>(rows.size());
  }
};

/// Uniformly spaced latitude band centers in (-90, 90), south to north.
inline Eigen::VectorXd latitude_centers_deg(int n_lat) {
  Eigen::VectorXd phi(n_lat);
  for (int i = 0; i < n_lat; ++i)
    phi[i] = -90.0 + 180.0 * (i + 0.5) / n_lat;
  return phi;
}

/// Latitude of the stencil center of a design, in degrees.
inline double design_center_latitude(const DesignSpace& ds,
                                     const Restriction& w) {
  const Eigen::VectorXd phi = latitude_centers_deg(ds.n_lat);
  const int first = w.id.lat_start - 1;
  double sum = 0.0;
  for (int j = 0; j < ds.stencil; ++j) sum += phi[first + j];
  return sum / ds.stencil;
}

inline std::vector<Restriction> enumerate_designs(const DesignSpace& ds) {
  ds.validate();
  std::vector<Restriction> designs;
  designs.reserve(ds.n_designs());
  const int block = ds.n_stats * ds.n_lat;
  int flat = 1;
  for (int season = 0; season < ds.n_seasons(); ++season) {
    const int sid = ds.mode == SeasonMode::kSeasonal ? season : -1;
    const int soff = ds.mode == SeasonMode::kSeasonal ? season * block : 0;
    for (int k = 1; k <= ds.designs_per_season(); ++k) {
      Restriction w;
      w.id = DesignId{sid, k, flat++};
      w.rows.reserve(static_cast<std::size_t>(ds.n_stats) * ds.stencil);
      for (int stat = 0; stat < ds.n_stats; ++stat)
        for (int j = 0; j < ds.stencil; ++j)
          w.rows.push_back(soff + stat * ds.n_lat + (k - 1) + j);
      designs.push_back(std::move(w));
    }
  }
  return designs;
}

/// The identity restriction on a full vector of dimension `dim`.
inline Restriction full_restriction(Eigen::Index dim) {
  Restriction w;
  w.id = DesignId{-1, 1, 1};
  w.rows.resize(static_cast<std::size_t>(dim));
  std::iota(w.rows.begin(), w.rows.end(), Eigen::Index{0});
  return w;
}

namespace detail {
inline void check_restriction(const Restriction& w, Eigen::Index dim) {
  for (Eigen::Index r : w.rows)
    if (r < 0 || r >= dim)
      throw std::invalid_argument("Restriction: row index out of range");
}
}  // namespace detail

/// W_k v: entries of `v` at w.rows.
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> restrict_vector(
    const Restriction& w, const Eigen::MatrixBase<Derived>& v) {
  detail::check_restriction(w, v.size());
  Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> out(w.out_dim());
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = v(w.rows[i]);
  return out;
}

/// Applies W_k to every row of a sample matrix (rows = samples).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
restrict_columns(const Restriction& w, const Eigen::MatrixBase<Derived>& m) {
  detail::check_restriction(w, m.cols());
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(
      m.rows(), w.out_dim());
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    out.col(j) = m.col(w.rows[j]);
  return out;
}

/// W_k S W_k^T: the principal submatrix of S at w.rows.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
restrict_matrix(const Restriction& w, const Eigen::MatrixBase<Derived>& s) {
  if (s.rows() != s.cols())
    throw std::invalid_argument("restrict_matrix: matrix must be square");
  detail::check_restriction(w, s.rows());
  const Eigen::Index d = w.out_dim();
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(
      d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = s(w.rows[i], w.rows[j]);
  return out;
}

inline CovarianceMatrix restrict_cov(const Restriction& w,
                                     const CovarianceMatrix& s) {
  return CovarianceMatrix(restrict_matrix(w, s.matrix()));
}

}  // namespace tuq
