#pragma once

// Empirical risk minimization directly over the complex matrix entries of
// the ansatz, with a unitarity penalty lambda ||G^dagger G - I||_F^2.
//
// Each restart starts from a Haar unitary plus complex Gaussian noise, runs
// Adam with a geometrically decaying learning rate, then polishes with
// L-BFGS. Every `log_every` iterations the iterate is polar-projected onto
// U(k) and its risk logged; the best logged projection is reported.

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/SVD>

#include "core.hpp"
#include "parallel.hpp"
#include "risk.hpp"
#include "training.hpp"

namespace linopt {

/// Unitary factor of the polar decomposition, the nearest unitary in
/// Frobenius norm.
inline ComplexMatrix polar_project(const ComplexMatrix& g) {
  detail::require(g.rows() == g.cols(), "polar projection needs a square matrix");
  if (g.size() == 0) return g;
  Eigen::JacobiSVD<ComplexMatrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-12 * std::max(sv(0), 1e-300)))
    throw SingularMatrix("matrix is singular; polar factor is not unique");
  return svd.matrixU() * svd.matrixV().adjoint();
}

inline ComplexTransfer polar_project(const ComplexTransfer& g) {
  return ComplexTransfer(polar_project(g.matrix()));
}

struct OptimConfig {
  int max_iters = 3000;
  double learning_rate = 0.02;
  double final_learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double penalty_weight = 10.0;
  int restarts = 10;
  double success_risk_threshold = 1e-7;
  double unitarity_threshold = 1e-6;
  double init_noise = 0.1;
  int polish_iters = 500;
  double polish_switch_risk = 1e-3;
  double stop_risk = 1e-14;
  int log_every = 50;
  bool record_trajectory = false;
  bool stop_on_success = true;
  int workers = 1;
  std::uint64_t seed = 0;
  std::optional<ComplexMatrix> initial;
};

struct TrajectoryPoint {
  int iteration = 0;
  double risk = 0.0;
  double residual = 0.0;
};

struct OptimResult {
  ComplexTransfer g_final;
  double risk_final = 1.0;
  double unitarity_residual = 0.0;
  bool converged = false;
  int iterations_used = 0;
  int restart = 0;
  int restarts_run = 0;
  std::vector<TrajectoryPoint> trajectory;
};

namespace detail {

class PenalizedObjective {
 public:
  PenalizedObjective(const ErmObjective& erm, double weight, Eigen::Index k)
      : erm_(erm), weight_(weight), k_(k) {}

  double operator()(const RealVector& theta, RealVector& grad) const {
    const ComplexMatrix g = unpack_parameters(theta, k_);
    ComplexMatrix rg;
    const double risk = erm_.risk_and_gradient(g, rg);
    const ComplexMatrix p = g.adjoint() * g - ComplexMatrix::Identity(k_, k_);
    grad = pack_parameters(rg + 4.0 * weight_ * (g * p));
    return risk + weight_ * p.squaredNorm();
  }

 private:
  const ErmObjective& erm_;
  double weight_;
  Eigen::Index k_;
};

class RestartRun {
 public:
  RestartRun(const ErmObjective& erm, const OptimConfig& cfg)
      : erm_(erm), cfg_(cfg), k_(erm.ansatz_modes()) {}

  OptimResult run(ComplexMatrix start) {
    result_ = OptimResult{};
    best_risk_ = std::numeric_limits<double>::infinity();
    const PenalizedObjective f(erm_, cfg_.penalty_weight, k_);
    RealVector theta = pack_parameters(start);
    int iter = 0;
    bool done = checkpoint(theta, iter);

    // Adam with geometric learning-rate decay.
    RealVector grad(theta.size());
    RealVector m = RealVector::Zero(theta.size());
    RealVector v = RealVector::Zero(theta.size());
    const double decay =
        cfg_.max_iters > 0
            ? std::pow(cfg_.final_learning_rate / cfg_.learning_rate, 1.0 / cfg_.max_iters)
            : 1.0;
    double lr = cfg_.learning_rate;
    double b1t = 1.0, b2t = 1.0;
    for (int t = 0; !done && t < cfg_.max_iters; ++t) {
      const double value = f(theta, grad);
      if (value < cfg_.polish_switch_risk) break;
      b1t *= cfg_.beta1;
      b2t *= cfg_.beta2;
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
      const RealVector m_hat = m / (1.0 - b1t);
      const RealVector v_hat = v / (1.0 - b2t);
      theta -= lr * (m_hat.array() / (v_hat.array().sqrt() + cfg_.epsilon)).matrix();
      lr *= decay;
      ++iter;
      if (iter % cfg_.log_every == 0) done = checkpoint(theta, iter);
    }

    if (!done) done = polish(f, theta, iter);
    if (!done) checkpoint(theta, iter);
    result_.iterations_used = iter;
    return result_;
  }

 private:
  // L-BFGS with Armijo backtracking on the penalized objective.
  bool polish(const PenalizedObjective& f, RealVector& theta, int& iter) {
    constexpr std::size_t kHistory = 10;
    std::deque<RealVector> s_hist, y_hist;
    std::deque<double> rho_hist;
    RealVector grad;
    double value = f(theta, grad);
    bool done = false;
    for (int it = 0; it < cfg_.polish_iters && !done; ++it) {
      if (value < cfg_.stop_risk || grad.norm() < 1e-15) break;
      RealVector q = grad;
      std::vector<double> alpha(s_hist.size());
      for (std::size_t i = s_hist.size(); i-- > 0;) {
        alpha[i] = rho_hist[i] * s_hist[i].dot(q);
        q -= alpha[i] * y_hist[i];
      }
      if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      for (std::size_t i = 0; i < s_hist.size(); ++i) {
        const double beta = rho_hist[i] * y_hist[i].dot(q);
        q += (alpha[i] - beta) * s_hist[i];
      }
      RealVector dir = -q;
      double slope = grad.dot(dir);
      if (!(slope < 0.0)) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        dir = -grad;
        slope = -grad.squaredNorm();
      }
      double step = s_hist.empty() ? std::min(1.0, 1.0 / grad.norm()) : 1.0;
      RealVector trial, trial_grad;
      double trial_value = value;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        trial = theta + step * dir;
        trial_value = f(trial, trial_grad);
        if (trial_value <= value + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      RealVector s = trial - theta;
      RealVector y = trial_grad - grad;
      const double sy = s.dot(y);
      if (sy > 1e-300) {
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(y));
        rho_hist.push_back(1.0 / sy);
        if (s_hist.size() > kHistory) {
          s_hist.pop_front();
          y_hist.pop_front();
          rho_hist.pop_front();
        }
      }
      theta = std::move(trial);
      grad = std::move(trial_grad);
      value = trial_value;
      ++iter;
      if (iter % cfg_.log_every == 0) done = checkpoint(theta, iter);
    }
    return done;
  }

  // Logs the polar projection of the iterate; true once the stop risk is hit.
  bool checkpoint(const RealVector& theta, int iter) {
    const ComplexMatrix g = unpack_parameters(theta, k_);
    ComplexMatrix projected;
    try {
      projected = polar_project(g);
    } catch (const SingularMatrix&) {
      return false;
    }
    const double risk = erm_.risk(projected);
    const double residual = ComplexTransfer(g).unitarity_residual();
    if (cfg_.record_trajectory) result_.trajectory.push_back({iter, risk, residual});
    if (risk < best_risk_ || (risk == best_risk_ && residual < result_.unitarity_residual)) {
      best_risk_ = risk;
      result_.g_final = ComplexTransfer(projected);
      result_.risk_final = risk;
      result_.unitarity_residual = residual;
    }
    return best_risk_ < cfg_.stop_risk;
  }

  const ErmObjective& erm_;
  const OptimConfig& cfg_;
  Eigen::Index k_;
  OptimResult result_;
  double best_risk_ = std::numeric_limits<double>::infinity();
};

inline bool better(const OptimResult& a, const OptimResult& b) {
  if (a.risk_final != b.risk_final) return a.risk_final < b.risk_final;
  return a.unitarity_residual < b.unitarity_residual;
}

}  // namespace detail

/// Starting point of restart r: Haar unitary + complex Gaussian noise with
/// E|noise_ij|^2 = init_noise^2, drawn from make_rng(seed, r).
inline ComplexMatrix initial_guess(int modes, const OptimConfig& cfg, int restart) {
  if (restart == 0 && cfg.initial) return *cfg.initial;
  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(restart));
  ComplexMatrix g = haar_unitary(modes, rng);
  std::normal_distribution<double> normal(0.0, cfg.init_noise / std::sqrt(2.0));
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) += Complex(normal(rng), normal(rng));
  return g;
}

/// Best-of-restarts minimization of an ERM objective. Restarts run in
/// batches of `workers`; with stop_on_success, the result is the best of
/// restarts 0..c where c is the first converged restart, independent of the
/// batch size.
inline OptimResult minimize(const ErmObjective& objective, const OptimConfig& cfg) {
  detail::require(cfg.restarts >= 1, "restarts must be >= 1");
  detail::require(cfg.success_risk_threshold > 0.0 && cfg.unitarity_threshold > 0.0,
                  "thresholds must be positive");
  detail::require(cfg.log_every >= 1, "log_every must be >= 1");
  const int k = objective.ansatz_modes();
  if (cfg.initial)
    detail::require_dims(cfg.initial->rows() == k && cfg.initial->cols() == k,
                         "initial matrix has the wrong size");
  std::vector<OptimResult> runs;
  int first_success = -1;
  const int batch = std::max(cfg.workers, 1);
  for (int start = 0; start < cfg.restarts && first_success < 0; start += batch) {
    const int count = std::min(batch, cfg.restarts - start);
    std::vector<OptimResult> results(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), cfg.workers, [&](std::size_t i) {
      const int r = start + static_cast<int>(i);
      detail::RestartRun run(objective, cfg);
      results[i] = run.run(initial_guess(k, cfg, r));
      results[i].restart = r;
      results[i].converged = results[i].risk_final < cfg.success_risk_threshold &&
                             results[i].unitarity_residual <= cfg.unitarity_threshold;
    });
    for (auto& r : results) {
      if (cfg.stop_on_success && first_success < 0 && r.converged) first_success = r.restart;
      runs.push_back(std::move(r));
    }
  }
  const int last = first_success >= 0 ? first_success : static_cast<int>(runs.size()) - 1;
  std::size_t best = 0;
  for (std::size_t i = 1; i <= static_cast<std::size_t>(last); ++i)
    if (detail::better(runs[i], runs[best])) best = i;
  OptimResult out = std::move(runs[best]);
  out.restarts_run = last + 1;
  return out;
}

inline OptimResult minimize(const TrainingSet& s, const SymplecticOrthogonal& target,
                            const OptimConfig& cfg) {
  return minimize(ErmObjective(s, target), cfg);
}

}  // namespace linopt
