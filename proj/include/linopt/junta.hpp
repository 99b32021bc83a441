#pragma once

// Adaptive discovery and learning of linear optical k-juntas.
//
// Stage 2 minimizes the empirical risk for every two-mode ansatz; the pairs
// whose minimum is within a relative tie tolerance of the stage minimum c_2
// are merged into J. Stages m = 3, 4, ... try J ∪ {l} for every l outside J
// and grow J the same way, until the stage minimum drops below the
// termination threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"
#include "risk.hpp"
#include "training.hpp"

namespace linopt {

inline OptimConfig default_stage_optimizer() {
  OptimConfig cfg;
  cfg.restarts = 4;
  cfg.max_iters = 2000;
  cfg.polish_iters = 800;
  cfg.stop_risk = 1e-16;
  return cfg;
}

struct StagePolicy {
  double termination_threshold = 1e-10;
  double tie_tolerance = 1e-2;
  /// Training-set size per stage is max(m, training_size) when set, m otherwise.
  std::optional<int> training_size;
  /// E_m = energy_scale * m unless stage_energy[m - 2] is given.
  double energy_scale = 1.0;
  std::vector<double> stage_energy;
  Scheme scheme = Scheme::ERM2;
  bool redraw_per_stage = true;
  /// Also test the product of the best disjoint pair ansatze after stage 2.
  bool product_shortcut = true;
  std::optional<double> energy_cap;
  OptimConfig optimizer = default_stage_optimizer();
  int workers = 1;

  int stage_size(int m) const { return training_size ? std::max(m, *training_size) : m; }
  double stage_energy_for(int m) const {
    const auto idx = static_cast<std::size_t>(m - 2);
    return idx < stage_energy.size() ? stage_energy[idx] : energy_scale * m;
  }
};

struct StageRecord {
  int stage = 0;
  int training_size = 0;
  double energy = 0.0;  // E_m charged per candidate
  std::vector<ModeSet> candidates;
  std::vector<double> candidate_minima;
  double minimum = 0.0;
  std::vector<ModeSet> selected;
  bool shortcut_checked = false;
  bool shortcut_taken = false;
};

struct JuntaReport {
  ModeSet junta;
  std::vector<StageRecord> stages;
  ComplexTransfer learned;       // on the junta modes, in ascending label order
  ComplexTransfer learned_full;  // M x M
  double final_risk = 1.0;
  double energy_spent = 0.0;
  int terminated_stage = 0;
};

/// Upper bound on the energy consumed when the algorithm stops at stage k:
/// C(M,2) E_2 (+ E_2 for the product check) + sum_{m=3}^{k} (M - m + 1) E_m.
inline double junta_energy_bound(int mode_count, int last_stage, const StagePolicy& policy,
                                 bool shortcut_checked) {
  double bound = 0.5 * mode_count * (mode_count - 1) * policy.stage_energy_for(2);
  if (shortcut_checked) bound += policy.stage_energy_for(2);
  for (int m = 3; m <= last_stage; ++m) bound += (mode_count - m + 1) * policy.stage_energy_for(m);
  return bound;
}

namespace detail {

inline ModeSet sorted_union(ModeSet a, const ModeSet& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

inline bool disjoint(const ModeSet& a, const ModeSet& b) {
  for (int x : a)
    if (std::find(b.begin(), b.end(), x) != b.end()) return false;
  return true;
}

struct CandidateFit {
  double risk = 1.0;
  ComplexMatrix g;
};

class JuntaSearch {
 public:
  JuntaSearch(const SymplecticOrthogonal& target, const StagePolicy& policy, std::uint64_t seed)
      : target_(target), policy_(policy), seed_(seed), modes_(target.mode_count()) {}

  JuntaReport run() {
    stage_two();
    for (int m = 3; report_.terminated_stage == 0; ++m) grow(m);
    return std::move(report_);
  }

 private:
  TrainingSet stage_data(int m) {
    if (!policy_.redraw_per_stage) {
      if (!shared_) {
        Rng rng = make_rng(seed_, 0);
        shared_ = sample_training_set(policy_.scheme, modes_,
                                      policy_.training_size.value_or(modes_),
                                      policy_.stage_energy_for(2), rng);
      }
      return *shared_;
    }
    Rng rng = make_rng(seed_, static_cast<std::uint64_t>(m));
    return sample_training_set(policy_.scheme, modes_, policy_.stage_size(m),
                               policy_.stage_energy_for(m), rng);
  }

  void charge(double energy) {
    if (policy_.energy_cap && report_.energy_spent + energy > *policy_.energy_cap)
      throw BudgetExceeded("energy cap " + std::to_string(*policy_.energy_cap) + " exceeded");
    report_.energy_spent += energy;
  }

  std::vector<CandidateFit> fit_all(const TrainingSet& data, const std::vector<ModeSet>& sets,
                                    int m) {
    std::vector<CandidateFit> fits(sets.size());
    parallel_for(sets.size(), policy_.workers, [&](std::size_t i) {
      ErmObjective objective(data, target_, sets[i]);
      OptimConfig cfg = policy_.optimizer;
      cfg.workers = 1;
      cfg.success_risk_threshold = policy_.termination_threshold;
      cfg.seed = seed_ * 1000003ULL + static_cast<std::uint64_t>(m) * 10007ULL + i;
      const OptimResult r = minimize(objective, cfg);
      fits[i] = {r.risk_final, r.g_final.matrix()};
    });
    return fits;
  }

  StageRecord record(int m, const TrainingSet& data, const std::vector<ModeSet>& sets,
                     const std::vector<CandidateFit>& fits) {
    StageRecord rec;
    rec.stage = m;
    rec.training_size = data.size();
    rec.energy = policy_.stage_energy_for(m);
    rec.candidates = sets;
    rec.minimum = fits.front().risk;
    for (const auto& f : fits) {
      rec.candidate_minima.push_back(f.risk);
      rec.minimum = std::min(rec.minimum, f.risk);
    }
    for (std::size_t i = 0; i < sets.size(); ++i)
      if (fits[i].risk <= rec.minimum * (1.0 + policy_.tie_tolerance)) rec.selected.push_back(sets[i]);
    return rec;
  }

  void finish(int m, const ComplexMatrix& full, const TrainingSet& data) {
    report_.terminated_stage = m;
    report_.learned_full = ComplexTransfer(full);
    report_.final_risk = ErmObjective(data, target_).risk(full);
    ComplexMatrix inner(static_cast<Eigen::Index>(report_.junta.size()),
                        static_cast<Eigen::Index>(report_.junta.size()));
    for (std::size_t a = 0; a < report_.junta.size(); ++a)
      for (std::size_t b = 0; b < report_.junta.size(); ++b)
        inner(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            full(report_.junta[a] - 1, report_.junta[b] - 1);
    report_.learned = ComplexTransfer(std::move(inner));
  }

  // Product of disjoint pair ansatze, taken greedily in order of increasing
  // stage minimum; a pair is kept only if it lowers the product's risk by
  // more than the tie tolerance.
  void stage_two() {
    if (modes_ < 2) throw InvalidParameter("junta search needs M >= 2");
    const int m = 2;
    const TrainingSet data = stage_data(m);
    std::vector<ModeSet> sets;
    for (int i = 1; i <= modes_; ++i)
      for (int j = i + 1; j <= modes_; ++j) sets.push_back({i, j});
    charge(static_cast<double>(sets.size()) * policy_.stage_energy_for(m));
    const auto fits = fit_all(data, sets, m);
    StageRecord rec = record(m, data, sets, fits);

    std::vector<std::size_t> order(sets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fits[a].risk < fits[b].risk; });

    for (const auto& s : rec.selected) report_.junta = sorted_union(report_.junta, s);

    if (rec.minimum < policy_.termination_threshold) {
      ComplexMatrix full = ComplexMatrix::Identity(modes_, modes_);
      ModeSet used;
      for (std::size_t i : order) {
        if (fits[i].risk > rec.minimum * (1.0 + policy_.tie_tolerance)) break;
        if (!disjoint(sets[i], used)) continue;
        full = embed_transfer(fits[i].g, sets[i], modes_) * full;
        used = sorted_union(used, sets[i]);
      }
      report_.stages.push_back(rec);
      finish(m, full, data);
      return;
    }

    if (policy_.product_shortcut) {
      const ErmObjective whole(data, target_);
      ComplexMatrix product = ComplexMatrix::Identity(modes_, modes_);
      double product_risk = whole.risk(product);
      ModeSet used;
      std::vector<ModeSet> pairs;
      for (std::size_t i : order) {
        if (!disjoint(sets[i], used)) continue;
        const ComplexMatrix trial = embed_transfer(fits[i].g, sets[i], modes_) * product;
        const double trial_risk = whole.risk(trial);
        if (trial_risk < product_risk * (1.0 - policy_.tie_tolerance)) {
          product = trial;
          product_risk = trial_risk;
          used = sorted_union(used, sets[i]);
          pairs.push_back(sets[i]);
        }
      }
      if (pairs.size() >= 2) {
        rec.shortcut_checked = true;
        charge(policy_.stage_energy_for(m));
        if (product_risk < policy_.termination_threshold) {
          rec.shortcut_taken = true;
          rec.selected = pairs;
          report_.junta = used;
          report_.stages.push_back(rec);
          finish(m, product, data);
          return;
        }
      }
    }
    report_.stages.push_back(rec);
  }

  void grow(int m) {
    std::vector<ModeSet> sets;
    for (int l = 1; l <= modes_; ++l)
      if (std::find(report_.junta.begin(), report_.junta.end(), l) == report_.junta.end())
        sets.push_back(sorted_union(report_.junta, {l}));
    if (sets.empty())
      throw StageLimitReached("stage " + std::to_string(m) +
                              ": J already covers every mode and the risk is still above threshold");
    const TrainingSet data = stage_data(m);
    charge(static_cast<double>(sets.size()) * policy_.stage_energy_for(m));
    const auto fits = fit_all(data, sets, m);
    StageRecord rec = record(m, data, sets, fits);
    std::size_t best = 0;
    for (std::size_t i = 1; i < fits.size(); ++i)
      if (fits[i].risk < fits[best].risk) best = i;
    for (const auto& s : rec.selected) report_.junta = sorted_union(report_.junta, s);
    report_.stages.push_back(rec);
    if (rec.minimum < policy_.termination_threshold)
      finish(m, embed_transfer(fits[best].g, sets[best], modes_), data);
  }

  const SymplecticOrthogonal& target_;
  const StagePolicy& policy_;
  std::uint64_t seed_;
  int modes_;
  std::optional<TrainingSet> shared_;
  JuntaReport report_;
};

}  // namespace detail

/// Adaptive k-LOJ discovery and learning. The target is only queried through
/// empirical risks on stage training sets; stage m draws its set from
/// make_rng(seed, m).
inline JuntaReport algorithm1(const SymplecticOrthogonal& target, const StagePolicy& policy,
                              std::uint64_t seed) {
  detail::require(policy.termination_threshold > 0.0 && policy.tie_tolerance >= 0.0,
                  "thresholds must be positive");
  return detail::JuntaSearch(target, policy, seed).run();
}

struct SwapJuntaResult {
  ModeSet junta;
  bool undetermined = false;  // zero-energy probes carry no information
  int probe_draws = 0;
  std::vector<double> fidelity_x;  // per-mode SWAP estimates
  std::vector<double> fidelity_y;
};

/// Semiclassical junta identification. Two probes x, y on the sphere of
/// radius sqrt(2E) are sent through the circuit; for each mode j, SWAP tests
/// compare the single-mode outputs (O_U x)_j with x_j and (O_U y)_j with y_j.
/// Mode j goes to the complement of J when both estimated fidelities exceed
/// 1 - 3/sqrt(shots). The probes must not be parallel on any single mode.
inline SwapJuntaResult swap_junta_id(const SymplecticOrthogonal& target, double energy, int shots,
                                     std::uint64_t seed) {
  detail::require(energy >= 0.0, "E must be >= 0");
  detail::require(shots >= 1, "shots must be >= 1");
  const int m = target.mode_count();
  SwapJuntaResult out;
  Rng rng = make_rng(seed, 0);
  RealVector x, y;
  if (energy == 0.0) {
    x = y = RealVector::Zero(2 * m);
    out.undetermined = true;
  } else {
    const double radius = std::sqrt(2.0 * energy);
    bool found = false;
    while (!found) {
      if (out.probe_draws == 100) throw DegenerateProbe("no non-parallel probe pair in 100 draws");
      ++out.probe_draws;
      x = uniform_on_sphere(2 * m, radius, rng);
      y = uniform_on_sphere(2 * m, radius, rng);
      found = true;
      for (int j = 0; j < m; ++j) {
        const double cross = x[j] * y[m + j] - x[m + j] * y[j];
        const double scale = std::hypot(x[j], x[m + j]) * std::hypot(y[j], y[m + j]);
        // a subnormal scale means the test below cannot resolve the angle
        if (!(scale >= std::numeric_limits<double>::min()) || !(std::abs(cross) > 1e-9 * scale))
          found = false;
      }
    }
  }
  const RealVector ox = target.matrix() * x;
  const RealVector oy = target.matrix() * y;
  const double pass = 1.0 - 3.0 / std::sqrt(static_cast<double>(shots));
  auto mode = [m](const RealVector& v, int j) {
    return RealVector{{v[j], v[m + j]}};
  };
  for (int j = 0; j < m; ++j) {
    Rng test_rng = make_rng(seed, 1 + static_cast<std::uint64_t>(j));
    const double fx = swap_test_fidelity(mode(ox, j), mode(x, j), shots, test_rng);
    const double fy = swap_test_fidelity(mode(oy, j), mode(y, j), shots, test_rng);
    out.fidelity_x.push_back(fx);
    out.fidelity_y.push_back(fy);
    if (!(fx > pass && fy > pass)) out.junta.push_back(j + 1);
  }
  return out;
}

}  // namespace linopt
