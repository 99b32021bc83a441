#pragma once

// Generalization-bound calculators and numerical checks of the Lipschitz and
// concentration statements behind them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "core.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"
#include "risk.hpp"
#include "training.hpp"

namespace linopt {

/// C_1 = 1 / (9 pi^3 ln 2).
inline const double kC1 = 1.0 / (9.0 * M_PI * M_PI * M_PI * std::log(2.0));

struct BoundParams {
  int mode_count = 1;
  double size = 1.0;  // T; real so that sufficiency searches can bisect
  double energy = 1.0;
  double delta = 0.1;

  void validate() const {
    detail::require(mode_count >= 1, "M must be >= 1");
    detail::require(size >= 1.0 && std::isfinite(size), "T must be >= 1");
    detail::require(energy >= 0.0 && std::isfinite(energy), "E must be finite and >= 0");
    detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  }
};

namespace detail {

inline double checked_sqrt(double radicand, const char* what) {
  if (radicand < 0.0)
    throw InvalidParameter(std::string(what) + ": negative radicand " + std::to_string(radicand) +
                           " (log term below zero for this T)");
  return std::sqrt(radicand);
}

}  // namespace detail

/// ERM2: sqrt(16 E M log(6 sqrt(C1 M T^3)) / (C1 T^3) + 16 E log(2/delta) / (C1 M T^3))
///       + 2 sqrt(E / (C1 M T^3))
inline double bound_erm2(const BoundParams& p) {
  p.validate();
  const double m = p.mode_count, t3 = p.size * p.size * p.size, e = p.energy;
  const double radicand = 16.0 * e * m * std::log(6.0 * std::sqrt(kC1 * m * t3)) / (kC1 * t3) +
                          16.0 * e * std::log(2.0 / p.delta) / (kC1 * m * t3);
  return detail::checked_sqrt(radicand, "bound_erm2") + 2.0 * std::sqrt(e / (kC1 * m * t3));
}

/// ERM1: sqrt(32 E M^2 log(6 sqrt T) / T + 32 E log(2/delta) / T) + 2 sqrt(E / T)
inline double bound_erm1(const BoundParams& p) {
  p.validate();
  const double m = p.mode_count, t = p.size, e = p.energy;
  const double radicand =
      32.0 * e * m * m * std::log(6.0 * std::sqrt(t)) / t + 32.0 * e * std::log(2.0 / p.delta) / t;
  return detail::checked_sqrt(radicand, "bound_erm1") + 2.0 * std::sqrt(e / t);
}

/// ERM1': the ERM1 bound with the per-state energy E/T in the concentration
/// terms, sqrt(32 E M^2 log(6 sqrt T) / T^2 + 32 E log(2/delta) / T^2) + 2 sqrt(E) / T.
inline double bound_erm1prime(const BoundParams& p) {
  p.validate();
  const double m = p.mode_count, t = p.size, e = p.energy;
  const double radicand = 32.0 * e * m * m * std::log(6.0 * std::sqrt(t)) / (t * t) +
                          32.0 * e * std::log(2.0 / p.delta) / (t * t);
  return detail::checked_sqrt(radicand, "bound_erm1prime") + 2.0 * std::sqrt(e) / t;
}

inline double generalization_bound(Scheme scheme, const BoundParams& p) {
  switch (scheme) {
    case Scheme::ERM1: return bound_erm1(p);
    case Scheme::ERM1P: return bound_erm1prime(p);
    case Scheme::ERM2: return bound_erm2(p);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Smallest real T >= 1 with bound <= target, by bisection in log T. T where
/// the bound is undefined count as insufficient.
inline double minimal_sufficient_size(Scheme scheme, int mode_count, double energy, double delta,
                                      double target = 1.0) {
  auto sufficient = [&](double t) {
    try {
      return generalization_bound(scheme, {mode_count, t, energy, delta}) <= target;
    } catch (const InvalidParameter&) {
      return false;
    }
  };
  if (sufficient(1.0)) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (!sufficient(hi)) {
    lo = hi;
    hi *= 2.0;
    detail::require(hi < 1e15, "no sufficient T below 1e15");
  }
  for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-12; ++i) {
    const double mid = std::sqrt(lo * hi);
    (sufficient(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "need two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    detail::require(x[i] > 0.0 && y[i] > 0.0, "log-log fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Lipschitz continuity in the circuit

struct LipschitzReport {
  int trials = 0;
  int violations_empirical = 0;  // |C_S(W) - C_S(V)| > sqrt(E) ||O_W - O_V||
  int violations_erm1 = 0;       // same for the ERM1 full risk (MC, 3 stderr margin)
  int violations_erm2 = 0;       // ERM2 full risk against the dimension-scaled radius
  double worst_ratio = 0.0;      // max observed gap / allowed epsilon
};

struct LipschitzOptions {
  long mc_samples = 4096;
  int max_size = 8;  // T drawn uniformly from 1..max_size
  int workers = 1;
};

namespace detail {

inline void lipschitz_trial(const SymplecticOrthogonal& w, const SymplecticOrthogonal& v,
                            double energy, std::uint64_t seed, std::uint64_t trial,
                            const LipschitzOptions& opt, LipschitzReport& report) {
  const int m = w.mode_count();
  Rng rng = make_rng(seed, 2 * trial);
  const SymplecticOrthogonal target = random_linear_optical(m, rng);
  const int size = std::uniform_int_distribution<int>(1, opt.max_size)(rng);
  const double norm = spectral_norm(w.matrix() - v.matrix());
  const double eps1 = std::sqrt(energy) * norm;
  const double eps2 =
      norm / std::sqrt((2.0 * m * size - 1.0) / (energy * (2.0 * m + 1.0)));
  auto ratio = [](double gap, double eps) {
    return eps > 0.0 ? gap / eps : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  };

  for (Scheme scheme : {Scheme::ERM1, Scheme::ERM2}) {
    const TrainingSet s = sample_training_set(scheme, m, size, energy, rng);
    const double gap = std::abs(ErmObjective(s, target).risk(complexify(w).matrix()) -
                                ErmObjective(s, target).risk(complexify(v).matrix()));
    if (gap > eps1 * (1.0 + 1e-12) + 1e-15) ++report.violations_empirical;
    report.worst_ratio = std::max(report.worst_ratio, ratio(gap, eps1));
  }

  const auto d1 = full_risk_difference_mc(Scheme::ERM1, target, w, v, m, size, energy,
                                          opt.mc_samples, seed ^ (2 * trial + 1), opt.workers);
  if (std::abs(d1.estimate) - 3.0 * d1.standard_error > eps1 + 1e-15) ++report.violations_erm1;
  report.worst_ratio = std::max(report.worst_ratio, ratio(std::abs(d1.estimate), eps1));

  const auto d2 = full_risk_difference_mc(Scheme::ERM2, target, w, v, m, size, energy,
                                          opt.mc_samples, seed ^ (2 * trial + 2), opt.workers);
  if (std::abs(d2.estimate) - 3.0 * d2.standard_error > eps2 + 1e-15) ++report.violations_erm2;
  report.worst_ratio = std::max(report.worst_ratio, ratio(std::abs(d2.estimate), eps2));
  ++report.trials;
}

}  // namespace detail

/// Checks the Lipschitz implications for a fixed pair (W, V) against `trials`
/// random targets and training sets.
inline LipschitzReport lipschitz_check(const SymplecticOrthogonal& w, const SymplecticOrthogonal& v,
                                       double energy, int trials, std::uint64_t seed,
                                       const LipschitzOptions& opt = {}) {
  detail::require(trials >= 1, "trials must be >= 1");
  detail::require(energy >= 0.0, "E must be >= 0");
  detail::require_dims(w.mode_count() == v.mode_count(), "W and V act on different M");
  LipschitzReport report;
  for (int t = 0; t < trials; ++t)
    detail::lipschitz_trial(w, v, energy, seed, static_cast<std::uint64_t>(t), opt, report);
  return report;
}

/// Random (W, V) pairs: even trials draw V independently, odd trials take
/// V = W exp(i t H) with t log-uniform in [1e-3, 1] so that the small-distance
/// regime is covered.
inline LipschitzReport lipschitz_sweep(int mode_count, double energy, int trials,
                                       std::uint64_t seed, const LipschitzOptions& opt = {}) {
  detail::require(trials >= 1, "trials must be >= 1");
  LipschitzReport report;
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed ^ 0x5eed, static_cast<std::uint64_t>(t));
    const ComplexMatrix gw = haar_unitary(mode_count, rng);
    ComplexMatrix gv;
    if (t % 2 == 0) {
      gv = haar_unitary(mode_count, rng);
    } else {
      const ComplexMatrix a = haar_unitary(mode_count, rng);
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a + a.adjoint());
      const double step = std::pow(10.0, std::uniform_real_distribution<double>(-3.0, 0.0)(rng));
      ComplexVector phases(mode_count);
      for (int j = 0; j < mode_count; ++j)
        phases[j] = std::exp(Complex(0.0, step * es.eigenvalues()[j]));
      gv = gw * es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    }
    detail::lipschitz_trial(realify(ComplexTransfer(gw)), realify(ComplexTransfer(gv)), energy, seed,
                            static_cast<std::uint64_t>(t), opt, report);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Gradient-norm and concentration diagnostics

/// Max over `samples` uniform points X on the sphere of radius R of the
/// gradient norm of f(X) = exp(-X^T L X / 2), i.e. ||f(X) L X||.
inline double gaussian_gradient_max(const RealMatrix& l, double radius, int samples, Rng& rng) {
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const RealVector x = uniform_on_sphere(l.rows(), radius, rng);
    const double f = std::exp(-0.5 * x.dot(l * x));
    best = std::max(best, (f * (l * x)).norm());
  }
  return best;
}

/// Max sampled norm of the gradient of the empirical risk with respect to
/// the training inputs: the parent vector in R^{2MT} for ERM2, a single
/// state in R^{2M} for ERM1 (T = 1 term).
inline double risk_input_gradient_max(Scheme scheme, const SymplecticOrthogonal& target,
                                      const SymplecticOrthogonal& ansatz, int size, double energy,
                                      int samples, Rng& rng) {
  const int m = target.mode_count();
  const RealMatrix diff = target.matrix() - ansatz.matrix();
  const RealMatrix l = diff.transpose() * diff;
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const TrainingSet s = sample_training_set(scheme, m, scheme == Scheme::ERM2 ? size : 1,
                                              energy, rng);
    double sq = 0.0;
    for (const auto& x : s.states) {
      const RealVector& v = x.components();
      const double f = std::exp(-0.5 * v.dot(l * v));
      sq += (f * (l * v) / s.size()).squaredNorm();
    }
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

/// Right-hand side of the concentration inequality on S^D:
/// 2 exp(-C1 (D + 1) eta^2 / kappa^2).
inline double levy_tail_bound(int sphere_dim, double eta, double kappa) {
  return 2.0 * std::exp(-kC1 * (sphere_dim + 1.0) * eta * eta / (kappa * kappa));
}

struct ConcentrationPoint {
  double eta = 0.0;
  double empirical_tail = 0.0;
  double bound = 0.0;
};

/// Empirical P(|f - mean f| >= eta) of f(X) = exp(-X^T L X / 2) on the
/// sphere of radius R in R^dim (mean from the same sample), against the
/// Levy bound with kappa = R ||L||.
inline std::vector<ConcentrationPoint> levy_concentration(const RealMatrix& l, double radius,
                                                          const std::vector<double>& etas,
                                                          int samples, Rng& rng) {
  std::vector<double> values(static_cast<std::size_t>(samples));
  for (auto& v : values) {
    const RealVector x = uniform_on_sphere(l.rows(), radius, rng);
    v = std::exp(-0.5 * x.dot(l * x));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= samples;
  const double kappa = radius * spectral_norm(l);
  std::vector<ConcentrationPoint> out;
  for (double eta : etas) {
    long hits = 0;
    for (double v : values) hits += std::abs(v - mean) >= eta;
    out.push_back({eta, static_cast<double>(hits) / samples,
                   levy_tail_bound(static_cast<int>(l.rows()) - 1, eta, kappa)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generalization experiment

struct GapRow {
  int size = 0;
  double bound = 0.0;
  std::vector<double> erm_gaps;      // |C - C_S| at the empirical risk minimizer
  std::vector<double> uniform_gaps;  // max |C - C_S| over the minimizer and the probe panel
  double median_erm_gap = 0.0;
  double median_uniform_gap = 0.0;
  int violations = 0;
  int failures = 0;  // optimizer runs that did not converge; excluded
};

struct BoundReport {
  Scheme scheme = Scheme::ERM1;
  int mode_count = 0;
  double energy = 0.0;
  double delta = 0.1;
  std::vector<GapRow> rows;
  double violation_fraction = 0.0;
  double bound_value = 0.0;  // bound at the largest T
};

struct ExperimentOptions {
  long mc_samples = 1L << 16;
  int probes = 16;  // fixed hypotheses drawn independently of every training set
  OptimConfig optimizer = [] {
    OptimConfig c;
    c.restarts = 3;
    return c;
  }();
  int workers = 1;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// For each T: draw `sets_per_T` training sets for one fixed random target,
/// minimize the empirical risk, and compare |C - C_S| (full risk by MC) with
/// the scheme's bound. The bound holds uniformly over hypotheses, so besides
/// the minimizer (where C and C_S both vanish for a realizable target) the
/// gap is also taken over a fixed panel of random hypotheses. A gap counts
/// as a violation only if it exceeds the bound by more than 3 standard errors.
inline BoundReport generalization_experiment(Scheme scheme, int mode_count, double energy,
                                             const std::vector<int>& sizes, double delta,
                                             int sets_per_size, std::uint64_t seed,
                                             const ExperimentOptions& opt = {}) {
  detail::require(!sizes.empty() && sets_per_size >= 1, "empty experiment grid");
  detail::require(opt.probes >= 0, "probes must be >= 0");
  BoundReport report;
  report.scheme = scheme;
  report.mode_count = mode_count;
  report.energy = energy;
  report.delta = delta;
  Rng panel_rng = make_rng(seed, 0);
  const SymplecticOrthogonal target = random_linear_optical(mode_count, panel_rng);
  std::vector<SymplecticOrthogonal> panel;
  std::vector<ComplexMatrix> panel_g;
  for (int k = 0; k < opt.probes; ++k) {
    panel.push_back(random_linear_optical(mode_count, panel_rng));
    panel_g.push_back(complexify(panel.back()).matrix());
  }
  int total = 0, violations = 0;
  for (std::size_t ti = 0; ti < sizes.size(); ++ti) {
    const int size = sizes[ti];
    GapRow row;
    row.size = size;
    row.bound = generalization_bound(scheme, {mode_count, static_cast<double>(size), energy, delta});
    const std::uint64_t base = (ti + 1) * 1000003ULL;
    std::vector<McEstimate> panel_full(panel.size());
    parallel_for(panel.size(), opt.workers, [&](std::size_t k) {
      panel_full[k] = full_risk_mc(scheme, target, panel[k], mode_count, size, energy,
                                   opt.mc_samples, seed ^ ((base + k) << 8), 1);
    });
    struct Cell {
      bool ok = false;
      double erm_gap = 0.0, uniform_gap = 0.0;
      bool violated = false;
    };
    std::vector<Cell> cells(static_cast<std::size_t>(sets_per_size));
    parallel_for(cells.size(), opt.workers, [&](std::size_t i) {
      const std::uint64_t stream = 1 + ti * static_cast<std::uint64_t>(sets_per_size) + i;
      Rng rng = make_rng(seed, stream);
      const TrainingSet s = sample_training_set(scheme, mode_count, size, energy, rng);
      OptimConfig cfg = opt.optimizer;
      cfg.workers = 1;
      cfg.seed = seed * 7919 + stream;
      const ErmObjective objective(s, target);
      const OptimResult fit = minimize(objective, cfg);
      Cell& c = cells[i];
      if (!fit.converged) return;
      c.ok = true;
      const auto full = full_risk_mc(scheme, target, realify(fit.g_final), mode_count, size, energy,
                                     opt.mc_samples, seed ^ (stream << 20), 1);
      c.erm_gap = std::abs(full.estimate - fit.risk_final);
      c.uniform_gap = c.erm_gap;
      c.violated = c.erm_gap - 3.0 * full.standard_error > row.bound;
      for (std::size_t k = 0; k < panel.size(); ++k) {
        const double gap = std::abs(panel_full[k].estimate - objective.risk(panel_g[k]));
        c.uniform_gap = std::max(c.uniform_gap, gap);
        c.violated = c.violated || gap - 3.0 * panel_full[k].standard_error > row.bound;
      }
    });
    for (const auto& c : cells) {
      if (!c.ok) {
        ++row.failures;
        continue;
      }
      row.erm_gaps.push_back(c.erm_gap);
      row.uniform_gaps.push_back(c.uniform_gap);
      row.violations += c.violated;
      ++total;
    }
    violations += row.violations;
    row.median_erm_gap = median(row.erm_gaps);
    row.median_uniform_gap = median(row.uniform_gaps);
    report.rows.push_back(std::move(row));
  }
  report.violation_fraction = total ? static_cast<double>(violations) / total : 0.0;
  report.bound_value = report.rows.back().bound;
  return report;
}

}  // namespace linopt
