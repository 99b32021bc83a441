#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace linopt {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream). Distinct streams of one seed
/// are used for per-restart, per-chunk and per-stage substreams.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6c696e6fu};
  return Rng(seq);
}

inline Eigen::VectorXd standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

/// Uniform point on the sphere of the given radius in R^dim (normalized
/// Gaussian). radius == 0 yields the origin.
inline Eigen::VectorXd uniform_on_sphere(Eigen::Index dim, double radius, Rng& rng) {
  Eigen::VectorXd v = standard_normal(dim, rng);
  if (radius == 0.0) return Eigen::VectorXd::Zero(dim);
  double n = v.norm();
  while (n == 0.0) {
    v = standard_normal(dim, rng);
    n = v.norm();
  }
  return v * (radius / n);
}

}  // namespace linopt
