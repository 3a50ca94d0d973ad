#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace tuq {

/// splitmix64 mixing step. Used to derive independent subsystem seeds from a
/// single master seed, so results never depend on scheduling order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive a child seed from a base seed and a path of stream identifiers,
/// e.g. derive_seed(master, {kEkiStream, iteration, member}).
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p));
  return s;
}

// Fixed stream tags for the pipeline stages.
namespace stream {
inline constexpr std::uint64_t kControl = 0x11;
inline constexpr std::uint64_t kData = 0x22;
inline constexpr std::uint64_t kEki = 0x33;
inline constexpr std::uint64_t kGp = 0x44;
inline constexpr std::uint64_t kMcmc = 0x55;
inline constexpr std::uint64_t kDesign = 0x66;
inline constexpr std::uint64_t kNoise = 0x77;
}  // namespace stream

using Rng = std::mt19937_64;

inline Eigen::VectorXd standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols,
                                       Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

}  // namespace tuq
