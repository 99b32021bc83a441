#pragma once

// Energy-constrained coherent-state training sets.
//
//   ERM1   every state lies on the sphere of radius sqrt(2E) in R^{2M}
//   ERM1P  every state lies on the sphere of radius sqrt(2E/T)
//   ERM2   one parent vector on the sphere of radius sqrt(2E) in R^{2MT},
//          cut into T consecutive blocks of length 2M

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"

namespace linopt {

enum class Scheme { ERM1, ERM1P, ERM2 };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::ERM1: return "ERM1";
    case Scheme::ERM1P: return "ERM1P";
    case Scheme::ERM2: return "ERM2";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& name) {
  if (name == "ERM1") return Scheme::ERM1;
  if (name == "ERM1P" || name == "ERM1'") return Scheme::ERM1P;
  if (name == "ERM2") return Scheme::ERM2;
  throw InvalidParameter("unknown scheme '" + name + "'");
}

struct TrainingSet {
  Scheme scheme = Scheme::ERM1;
  int mode_count = 0;
  double energy = 0.0;  // E as passed to the sampler
  std::vector<MeanVector> states;
  std::optional<RealVector> parent;  // ERM2 only
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(states.size()); }

  double total_energy() const {
    double e = 0.0;
    for (const auto& s : states) e += s.energy();
    return e;
  }

  /// Columns are the states in transfer coordinates q - i p.
  ComplexMatrix transfer_coordinates() const {
    ComplexMatrix z(mode_count, size());
    for (int j = 0; j < size(); ++j) z.col(j) = to_transfer_coordinates(states[j].components());
    return z;
  }
};

/// Block j (0-based) of a parent vector in R^{2MT}.
inline RealVector project_block(const RealVector& parent, int mode_count, int block) {
  return parent.segment(static_cast<Eigen::Index>(2 * mode_count) * block, 2 * mode_count);
}

inline TrainingSet sample_training_set(Scheme scheme, int mode_count, int size, double energy,
                                       Rng& rng) {
  detail::require(mode_count >= 1, "M must be >= 1");
  detail::require(size >= 1, "T must be >= 1");
  detail::require(energy >= 0.0 && std::isfinite(energy), "E must be finite and >= 0");
  TrainingSet set;
  set.scheme = scheme;
  set.mode_count = mode_count;
  set.energy = energy;
  set.states.reserve(static_cast<std::size_t>(size));
  const Eigen::Index dim = 2 * mode_count;
  switch (scheme) {
    case Scheme::ERM1:
    case Scheme::ERM1P: {
      const double radius =
          scheme == Scheme::ERM1 ? std::sqrt(2.0 * energy) : std::sqrt(2.0 * energy / size);
      for (int j = 0; j < size; ++j)
        set.states.emplace_back(uniform_on_sphere(dim, radius, rng));
      break;
    }
    case Scheme::ERM2: {
      RealVector parent = uniform_on_sphere(dim * size, std::sqrt(2.0 * energy), rng);
      for (int j = 0; j < size; ++j)
        set.states.emplace_back(project_block(parent, mode_count, j));
      set.parent = std::move(parent);
      break;
    }
  }
  return set;
}

inline TrainingSet sample_training_set(Scheme scheme, int mode_count, int size, double energy,
                                       std::uint64_t seed) {
  Rng rng = make_rng(seed);
  TrainingSet set = sample_training_set(scheme, mode_count, size, energy, rng);
  set.seed = seed;
  return set;
}

/// Normalized density of one ERM2 block x1 in R^{2M}, i.e. the marginal of
/// the first 2M coordinates of a uniform point on S^{2MT-1}(sqrt(2E)):
///
///   p(x1) = Gamma(MT) / (Gamma(M(T-1)) pi^M) (2E)^{1-MT} (2E - |x1|^2)^{M(T-1)-1}
///
/// for |x1|^2 < 2E and 0 outside.
inline double marginal_density(const RealVector& x1, int mode_count, int size, double energy) {
  detail::require(mode_count >= 1, "M must be >= 1");
  detail::require(static_cast<int>(x1.size()) == 2 * mode_count, "x1 must have 2M components");
  if (size < 2)
    throw UnsupportedRegime("T = 1: the block is the whole sphere, a point mass in radius");
  detail::require(energy > 0.0, "E must be > 0");
  const double r2 = 2.0 * energy;
  const double s = x1.squaredNorm();
  if (s > r2) return 0.0;
  const double half_n = static_cast<double>(mode_count) * size;
  const double half_rest = static_cast<double>(mode_count) * (size - 1);
  const double exponent = half_rest - 1.0;
  if (s == r2 && exponent > 0.0) return 0.0;
  const double log_norm = std::lgamma(half_n) - std::lgamma(half_rest) -
                          mode_count * std::log(M_PI) + (1.0 - half_n) * std::log(r2);
  const double log_shape = exponent == 0.0 ? 0.0 : exponent * std::log(r2 - s);
  return std::exp(log_norm + log_shape);
}

inline double marginal_density(const MeanVector& x1, int mode_count, int size, double energy) {
  return marginal_density(x1.components(), mode_count, size, energy);
}

}  // namespace linopt
