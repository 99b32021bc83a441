#pragma once

// Empirical and full risks for learning a linear optical circuit from
// coherent states. For pure states (1/4)||rho - sigma||_1^2 = 1 - |<.|.>|^2,
// so every risk term is 1 - exp(-x^T L x / 2).

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "core.hpp"
#include "parallel.hpp"
#include "training.hpp"

namespace linopt {

struct RiskReport {
  double value = 0.0;
  std::vector<double> per_term;
  Scheme scheme = Scheme::ERM1;
  std::optional<RealVector> gradient;
  std::optional<double> standard_error;
  std::optional<int> shots;
};

/// Real parameter vector of a complex matrix: Re entries row-major, then Im
/// entries row-major.
inline RealVector pack_parameters(const ComplexMatrix& g) {
  const Eigen::Index n = g.rows() * g.cols();
  RealVector theta(2 * n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j, ++k) {
      theta[k] = g(i, j).real();
      theta[n + k] = g(i, j).imag();
    }
  return theta;
}

inline ComplexMatrix unpack_parameters(const RealVector& theta, Eigen::Index rows) {
  const Eigen::Index n = rows * rows;
  detail::require_dims(theta.size() == 2 * n, "parameter vector has the wrong length");
  ComplexMatrix g(rows, rows);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < rows; ++j, ++k) g(i, j) = Complex(theta[k], theta[n + k]);
  return g;
}

namespace detail {

inline void check_risk_inputs(const TrainingSet& s, const SymplecticOrthogonal& target,
                              const ComplexTransfer& g) {
  require_dims(target.mode_count() == s.mode_count, "target and training set mode counts differ");
  require_dims(g.mode_count() == s.mode_count, "ansatz and training set mode counts differ");
}

}  // namespace detail

/// Empirical risk (1/T) sum_j (1 - exp(-x_j^T L x_j / 2)) with O_V the block
/// matrix of G; G need not be unitary.
inline RiskReport empirical_risk(const TrainingSet& s, const SymplecticOrthogonal& target,
                                 const ComplexTransfer& g) {
  detail::check_risk_inputs(s, target, g);
  const RealMatrix o_v = realify_unchecked(g.matrix());
  RiskReport report;
  report.scheme = s.scheme;
  report.per_term.reserve(s.states.size());
  double sum = 0.0;
  for (const auto& x : s.states) {
    const double term = 1.0 - fidelity(x.components(), target.matrix(), o_v);
    report.per_term.push_back(term);
    sum += term;
  }
  report.value = s.states.empty() ? 0.0 : sum / static_cast<double>(s.states.size());
  return report;
}

/// Empirical risk of an ansatz acting on a subset K of the modes (identity on
/// the rest), written in transfer coordinates so it is cheap to evaluate
/// repeatedly. With K = all modes this is `empirical_risk`.
///
/// For state j with zeta_j = q_j - i p_j and target outputs w_j = G_U zeta_j:
///   s_j = ||w_j[K] - G_K zeta_j[K]||^2 + ||w_j[K^c] - zeta_j[K^c]||^2
///   risk = mean_j (1 - exp(-s_j / 2))
/// and the packed gradient (d/dRe + i d/dIm) is -(1/T) sum_j F_j d_j zeta_j^H.
class ErmObjective {
 public:
  ErmObjective(const TrainingSet& s, const SymplecticOrthogonal& target, ModeSet modes = {})
      : mode_count_(s.mode_count) {
    detail::require_dims(target.mode_count() == s.mode_count,
                         "target and training set mode counts differ");
    if (modes.empty())
      for (int m = 1; m <= mode_count_; ++m) modes.push_back(m);
    validate_modes(modes, mode_count_);
    modes_ = std::move(modes);
    const ComplexMatrix z = s.transfer_coordinates();
    const ComplexMatrix w = complexify(target).matrix() * z;
    const Eigen::Index k = static_cast<Eigen::Index>(modes_.size());
    const Eigen::Index t = z.cols();
    z_sub_.resize(k, t);
    w_sub_.resize(k, t);
    offset_ = RealVector::Zero(t);
    std::vector<bool> inside(static_cast<std::size_t>(mode_count_), false);
    for (Eigen::Index a = 0; a < k; ++a) {
      const int row = modes_[static_cast<std::size_t>(a)] - 1;
      inside[static_cast<std::size_t>(row)] = true;
      z_sub_.row(a) = z.row(row);
      w_sub_.row(a) = w.row(row);
    }
    for (int row = 0; row < mode_count_; ++row)
      if (!inside[static_cast<std::size_t>(row)])
        offset_ += (w.row(row) - z.row(row)).cwiseAbs2().transpose();
  }

  int ansatz_modes() const { return static_cast<int>(modes_.size()); }
  int mode_count() const { return mode_count_; }
  int size() const { return static_cast<int>(z_sub_.cols()); }
  const ModeSet& modes() const { return modes_; }

  RealVector per_term(const ComplexMatrix& g) const {
    const ComplexMatrix d = w_sub_ - g * z_sub_;
    RealVector s = offset_ + d.colwise().squaredNorm().transpose();
    return (1.0 - (-0.5 * s.array()).exp()).matrix();
  }

  double risk(const ComplexMatrix& g) const {
    if (size() == 0) return 0.0;
    return per_term(g).mean();
  }

  double risk_and_gradient(const ComplexMatrix& g, ComplexMatrix& grad) const {
    if (size() == 0) {
      grad = ComplexMatrix::Zero(g.rows(), g.cols());
      return 0.0;
    }
    const ComplexMatrix d = w_sub_ - g * z_sub_;
    const RealVector s = offset_ + d.colwise().squaredNorm().transpose();
    const RealVector f = (-0.5 * s.array()).exp().matrix();
    const double inv_t = 1.0 / static_cast<double>(size());
    grad = -inv_t * (d * f.asDiagonal()) * z_sub_.adjoint();
    return 1.0 - f.mean();
  }

  /// Full M x M transfer matrix of the ansatz.
  ComplexMatrix embed(const ComplexMatrix& g) const {
    return embed_transfer(g, modes_, mode_count_);
  }

 private:
  int mode_count_;
  ModeSet modes_;
  ComplexMatrix z_sub_;
  ComplexMatrix w_sub_;
  RealVector offset_;
};

/// Gradient of `empirical_risk` with respect to (Re G, Im G), laid out as in
/// `pack_parameters`.
inline RealVector empirical_risk_gradient(const TrainingSet& s, const SymplecticOrthogonal& target,
                                          const ComplexTransfer& g) {
  detail::check_risk_inputs(s, target, g);
  ErmObjective objective(s, target);
  ComplexMatrix grad;
  objective.risk_and_gradient(g.matrix(), grad);
  return pack_parameters(grad);
}

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  long samples = 0;
};

/// Samples per RNG substream. Chunk c of a Monte-Carlo run draws from
/// make_rng(seed, c), so results depend only on (seed, samples).
inline constexpr long kMcChunkSize = 1L << 14;

/// Average of f over the uniform measure on the sphere of the given radius in
/// R^dim, with its standard error.
template <class F>
McEstimate sphere_average(Eigen::Index dim, double radius, long samples, std::uint64_t seed,
                          int workers, F&& f) {
  detail::require(samples >= 2, "need at least two samples");
  const long chunks = (samples + kMcChunkSize - 1) / kMcChunkSize;
  struct Partial {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;
  };
  std::vector<Partial> partial(static_cast<std::size_t>(chunks));
  parallel_for(static_cast<std::size_t>(chunks), workers, [&](std::size_t c) {
    Rng rng = make_rng(seed, c);
    const long count = std::min(kMcChunkSize, samples - static_cast<long>(c) * kMcChunkSize);
    Partial p;
    for (long i = 0; i < count; ++i) {
      const double v = f(uniform_on_sphere(dim, radius, rng));
      ++p.n;
      const double delta = v - p.mean;
      p.mean += delta / static_cast<double>(p.n);
      p.m2 += delta * (v - p.mean);
    }
    partial[c] = p;
  });
  Partial total;
  for (const auto& p : partial) {
    if (p.n == 0) continue;
    const long n = total.n + p.n;
    const double delta = p.mean - total.mean;
    total.mean += delta * static_cast<double>(p.n) / static_cast<double>(n);
    total.m2 += p.m2 + delta * delta * static_cast<double>(total.n) * static_cast<double>(p.n) /
                           static_cast<double>(n);
    total.n = n;
  }
  McEstimate out;
  out.samples = total.n;
  out.estimate = total.mean;
  const double variance = total.m2 / static_cast<double>(total.n - 1);
  out.standard_error = std::sqrt(std::max(variance, 0.0) / static_cast<double>(total.n));
  return out;
}

namespace detail {

struct SphereGeometry {
  Eigen::Index dim;
  double radius;
};

inline SphereGeometry full_risk_geometry(Scheme scheme, int mode_count, int size, double energy) {
  require(mode_count >= 1 && size >= 1, "M and T must be >= 1");
  require(energy >= 0.0, "E must be >= 0");
  switch (scheme) {
    case Scheme::ERM1: return {2 * mode_count, std::sqrt(2.0 * energy)};
    case Scheme::ERM1P: return {2 * mode_count, std::sqrt(2.0 * energy / size)};
    case Scheme::ERM2:
      return {static_cast<Eigen::Index>(2) * mode_count * size, std::sqrt(2.0 * energy)};
  }
  return {0, 0.0};
}

}  // namespace detail

/// Monte-Carlo estimate of the full risk: the average risk term over the
/// training-state distribution of the scheme (ERM1: S^{2M-1}(sqrt(2E));
/// ERM1P: S^{2M-1}(sqrt(2E/T)); ERM2: first block of S^{2MT-1}(sqrt(2E))).
inline McEstimate full_risk_mc(Scheme scheme, const SymplecticOrthogonal& target,
                               const SymplecticOrthogonal& ansatz, int mode_count, int size,
                               double energy, long samples, std::uint64_t seed, int workers = 1) {
  detail::require_dims(target.mode_count() == mode_count && ansatz.mode_count() == mode_count,
                       "circuits do not act on M modes");
  const auto geo = detail::full_risk_geometry(scheme, mode_count, size, energy);
  const RealMatrix diff = target.matrix() - ansatz.matrix();
  const Eigen::Index block = 2 * mode_count;
  return sphere_average(geo.dim, geo.radius, samples, seed, workers, [&](const RealVector& x) {
    return 1.0 - std::exp(-0.5 * (diff * x.head(block)).squaredNorm());
  });
}

/// C(W) - C(V) estimated with common random numbers.
inline McEstimate full_risk_difference_mc(Scheme scheme, const SymplecticOrthogonal& target,
                                          const SymplecticOrthogonal& w,
                                          const SymplecticOrthogonal& v, int mode_count, int size,
                                          double energy, long samples, std::uint64_t seed,
                                          int workers = 1) {
  detail::require_dims(target.mode_count() == mode_count && w.mode_count() == mode_count &&
                           v.mode_count() == mode_count,
                       "circuits do not act on M modes");
  const auto geo = detail::full_risk_geometry(scheme, mode_count, size, energy);
  const RealMatrix dw = target.matrix() - w.matrix();
  const RealMatrix dv = target.matrix() - v.matrix();
  const Eigen::Index block = 2 * mode_count;
  return sphere_average(geo.dim, geo.radius, samples, seed, workers, [&](const RealVector& x) {
    const auto head = x.head(block);
    return std::exp(-0.5 * (dv * head).squaredNorm()) - std::exp(-0.5 * (dw * head).squaredNorm());
  });
}

struct SeriesResult {
  double value = 0.0;         // the full risk C
  double complement = 1.0;    // 1 - C, the summed series
  int truncation_order = 0;
  std::vector<double> singular_values;  // of O_U - O_V, descending
  double error_estimate = 0.0;
  bool convergence_warning = false;
};

/// Full risk by the sphere-moment series. With kappa_j the singular values
/// of O_U - O_V and n/2 = M * blocks the half-dimension of the sampling
/// sphere (blocks = T for ERM2, 1 otherwise),
///
///   1 - C = sum_s Gamma(n/2) / Gamma(n/2 + s) * sum_{|i| = s} prod_j a_j(i_j),
///   a_j(i) = (-E kappa_j^2)^i Gamma(i + 1/2) / (i! sqrt(pi)).
///
/// Shells are built by truncated convolution of the per-j sequences and
/// summed until a shell drops below 1e-12 (after the terms start
/// shrinking) or `order` is reached.
inline SeriesResult series_full_risk(const SymplecticOrthogonal& target,
                                     const SymplecticOrthogonal& ansatz, double energy,
                                     int mode_count, int order, int blocks = 1) {
  detail::require(order >= 1, "order must be >= 1");
  detail::require(blocks >= 1, "blocks must be >= 1");
  detail::require(energy >= 0.0, "E must be >= 0");
  detail::require_dims(target.mode_count() == mode_count && ansatz.mode_count() == mode_count,
                       "circuits do not act on M modes");
  using Real = long double;
  const RealMatrix gram = difference_gram(target.matrix(), ansatz.matrix());
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(gram, Eigen::EigenvaluesOnly);
  SeriesResult result;
  std::vector<double> kappa2;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
    kappa2.push_back(std::max(eig.eigenvalues()(i), 0.0));
  std::sort(kappa2.begin(), kappa2.end(), std::greater<>());
  for (double k2 : kappa2) result.singular_values.push_back(std::sqrt(k2));

  const auto n = static_cast<std::size_t>(order);
  std::vector<Real> shell(n + 1, 0.0L);
  shell[0] = 1.0L;
  std::vector<Real> factor(n + 1), next(n + 1);
  for (double k2 : kappa2) {
    if (k2 == 0.0) continue;
    const Real c = -static_cast<Real>(energy) * k2;
    factor[0] = 1.0L;
    for (std::size_t i = 0; i < n; ++i)
      factor[i + 1] = factor[i] * c * (static_cast<Real>(i) + 0.5L) / static_cast<Real>(i + 1);
    for (std::size_t s = 0; s <= n; ++s) {
      Real acc = 0.0L;
      for (std::size_t i = 0; i <= s; ++i) acc += shell[s - i] * factor[i];
      next[s] = acc;
    }
    shell.swap(next);
  }

  const Real half_dim = static_cast<Real>(mode_count) * blocks;
  Real ratio = 1.0L;  // Gamma(h) / Gamma(h + s)
  Real sum = 0.0L;
  Real largest = 0.0L;
  Real last = 0.0L;
  Real previous = 0.0L;
  std::size_t used = 0;
  for (std::size_t s = 0; s <= n; ++s) {
    const Real term = shell[s] * ratio;
    sum += term;
    largest = std::max(largest, std::fabs(term));
    last = term;
    used = s;
    if (s >= 1 && std::fabs(term) < 1e-12L && std::fabs(term) <= std::fabs(previous)) break;
    previous = term;
    ratio /= (half_dim + static_cast<Real>(s));
  }
  result.truncation_order = static_cast<int>(used);
  result.complement = static_cast<double>(sum);
  result.value = 1.0 - result.complement;
  result.error_estimate = static_cast<double>(std::fabs(last) + largest * static_cast<Real>(used + 1) *
                                                                    LDBL_EPSILON);
  result.convergence_warning = result.error_estimate > 1e-8;
  return result;
}

struct ShotModel {
  int shots = 1000;
  std::uint64_t seed = 0;
};

/// One shot-limited CV SWAP test between coherent states with mean vectors
/// a and b. The difference port of each balanced beamsplitter carries a
/// coherent state, so the total count is Poisson with mean ||a - b||^2 / 4
/// and P(all vacuum) = sqrt(F). Returns the squared vacuum fraction.
inline double swap_test_fidelity(const RealVector& a, const RealVector& b, int shots, Rng& rng) {
  detail::require(shots >= 1, "shots must be >= 1");
  const double mu = (a - b).squaredNorm() / 4.0;
  std::binomial_distribution<int> vacuum(shots, std::exp(-mu));
  const double fraction = static_cast<double>(vacuum(rng)) / shots;
  return fraction * fraction;
}

/// Empirical risk estimated from shot-limited SWAP tests. Term j uses
/// make_rng(model.seed, j).
inline RiskReport swap_test_risk(const TrainingSet& s, const SymplecticOrthogonal& target,
                                 const ComplexTransfer& g, const ShotModel& model) {
  detail::check_risk_inputs(s, target, g);
  detail::require(model.shots >= 1, "shots must be >= 1");
  const SymplecticOrthogonal ansatz = realify(g);
  RiskReport report;
  report.scheme = s.scheme;
  report.shots = model.shots;
  double sum = 0.0;
  for (int j = 0; j < s.size(); ++j) {
    Rng rng = make_rng(model.seed, static_cast<std::uint64_t>(j));
    const RealVector& x = s.states[static_cast<std::size_t>(j)].components();
    const double term =
        1.0 - swap_test_fidelity(target.matrix() * x, ansatz.matrix() * x, model.shots, rng);
    report.per_term.push_back(term);
    sum += term;
  }
  report.value = s.size() == 0 ? 0.0 : sum / s.size();
  return report;
}

}  // namespace linopt
