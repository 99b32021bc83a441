#include <gtest/gtest.h>

#include <linopt/bounds.hpp>

using namespace linopt;

namespace {

std::vector<double> powers_of_two(double from, double to) {
  std::vector<double> v;
  for (double x = from; x <= to; x *= 2) v.push_back(x);
  return v;
}

std::vector<double> sufficiency(Scheme s, const std::vector<double>& grid, bool vary_energy) {
  std::vector<double> out;
  for (double g : grid)
    out.push_back(vary_energy ? minimal_sufficient_size(s, 4, g, 0.1)
                              : minimal_sufficient_size(s, static_cast<int>(g), 4.0, 0.1));
  return out;
}

}  // namespace

TEST(Constants, C1ClosedForm) {
  EXPECT_NEAR(kC1, 1.0 / (9.0 * std::pow(std::acos(-1.0), 3) * std::log(2.0)), 1e-15);
  EXPECT_NEAR(kC1, 0.0051699, 1e-6);
}

TEST(BoundFormulas, HandEvaluated) {
  // M = 2, T = 4, E = 1, delta = 0.1, written out term by term
  const double m = 2, t = 4, e = 1, d = 0.1;
  const double erm1 = std::sqrt(32 * e * m * m * std::log(6 * std::sqrt(t)) / t + 32 * e * std::log(2 / d) / t) +
                      2 * std::sqrt(e / t);
  const double c = kC1 * m * t * t * t;
  const double erm2 = std::sqrt(16 * e * m * std::log(6 * std::sqrt(c)) / (kC1 * t * t * t) +
                                16 * e * std::log(2 / d) / c) +
                      2 * std::sqrt(e / c);
  const BoundParams p{2, 4.0, 1.0, 0.1};
  EXPECT_NEAR(bound_erm1(p), erm1, 1e-12);
  EXPECT_NEAR(bound_erm2(p), erm2, 1e-12);
  EXPECT_EQ(generalization_bound(Scheme::ERM1, p), bound_erm1(p));
  EXPECT_EQ(generalization_bound(Scheme::ERM2, p), bound_erm2(p));
  EXPECT_EQ(generalization_bound(Scheme::ERM1P, p), bound_erm1prime(p));
}

TEST(BoundFormulas, DecreasingInT) {
  for (int m : {1, 2, 4})
    for (double e : {0.5, 1.0, 8.0}) {
      double p1 = INFINITY, p1p = INFINITY, p2 = INFINITY;
      for (int t = 2; t <= 64; ++t) {
        const BoundParams p{m, double(t), e, 0.1};
        EXPECT_LT(bound_erm1(p), p1);
        EXPECT_LT(bound_erm1prime(p), p1p);
        EXPECT_LT(bound_erm2(p), p2);
        p1 = bound_erm1(p);
        p1p = bound_erm1prime(p);
        p2 = bound_erm2(p);
      }
    }
}

TEST(BoundFormulas, Erm2ScalesAsTToMinusThreeHalves) {
  // bound(T) * T^{3/2} / sqrt(log T) flattens; fit the exponent at large T
  std::vector<double> ts, bs;
  for (double t = 1e3; t <= 1e6; t *= 2) {
    ts.push_back(t);
    bs.push_back(bound_erm2({2, t, 1.0, 0.1}) / std::sqrt(std::log(6.0 * std::sqrt(kC1 * 2 * t * t * t))));
  }
  EXPECT_NEAR(loglog_slope(ts, bs), -1.5, 0.1);
}

TEST(BoundFormulas, DeltaToOneLimit) {
  const double near_one = bound_erm2({2, 8.0, 1.0, 1.0 - 1e-12});
  const double t3 = 512.0;
  const double limit =
      std::sqrt(16.0 * 2 * std::log(6.0 * std::sqrt(kC1 * 2 * t3)) / (kC1 * t3) + 16.0 * std::log(2.0) / (kC1 * 2 * t3)) +
      2.0 * std::sqrt(1.0 / (kC1 * 2 * t3));
  EXPECT_NEAR(near_one, limit, 1e-10);
  EXPECT_GT(bound_erm2({2, 8.0, 1.0, 0.01}), near_one);
}

TEST(BoundFormulas, Erm2BelowErm1OnGrid) {
  // 1/C1 ~ 193 in the ERM2 formula delays the crossover to T^2 M of order 80
  for (int m = 2; m <= 16; m *= 2)
    for (double e : {0.1, 1.0, 10.0, 100.0})
      for (int t = 2; t <= 256; ++t)
        for (double d : {0.01, 0.1, 0.5}) {
          const BoundParams p{m, double(t), e, d};
          if (t * t * m >= 98) EXPECT_LT(bound_erm2(p), bound_erm1(p)) << m << " " << e << " " << t << " " << d;
          if (t * t * m <= 64) EXPECT_GT(bound_erm2(p), bound_erm1(p)) << m << " " << e << " " << t << " " << d;
        }
}

TEST(BoundFormulas, Erm2AdvantageGrowsWithT) {
  for (int m : {2, 4, 8}) {
    double previous = INFINITY;
    for (int t = 2; t <= 512; t *= 2) {
      const BoundParams p{m, double(t), 1.0, 0.1};
      const double ratio = bound_erm2(p) / bound_erm1(p);
      EXPECT_LT(ratio, previous);
      previous = ratio;
    }
    EXPECT_LT(previous, 0.05);
  }
}

TEST(BoundFormulas, Erm1PrimeBelowErm1) {
  for (int m = 1; m <= 8; ++m)
    for (int t = 1; t <= 64; t *= 2) {
      const BoundParams p{m, double(t), 2.0, 0.1};
      EXPECT_LE(bound_erm1prime(p), bound_erm1(p));
    }
}

TEST(BoundFormulas, ZeroEnergyGivesZero) {
  for (Scheme s : {Scheme::ERM1, Scheme::ERM1P, Scheme::ERM2})
    EXPECT_EQ(generalization_bound(s, {3, 5.0, 0.0, 0.1}), 0.0);
  EXPECT_LT(bound_erm1prime({3, 5.0, 1e-12, 0.1}), 1e-4);
}

TEST(BoundFormulas, InvalidParameters) {
  EXPECT_THROW(bound_erm1({0, 2.0, 1.0, 0.1}), InvalidParameter);
  EXPECT_THROW(bound_erm1({2, 0.5, 1.0, 0.1}), InvalidParameter);
  EXPECT_THROW(bound_erm2({2, 2.0, -1.0, 0.1}), InvalidParameter);
  EXPECT_THROW(bound_erm2({2, 2.0, 1.0, 0.0}), InvalidParameter);
  EXPECT_THROW(bound_erm2({2, 2.0, 1.0, 1.0}), InvalidParameter);
  // M = 1, T = 1: 6 sqrt(C1) < 1 makes the ERM2 log negative and dominant
  EXPECT_THROW(bound_erm2({1, 1.0, 1.0, 0.9}), InvalidParameter);
}

TEST(Sufficiency, Erm1PrimeSlopes) {
  const auto e = powers_of_two(1, 1024), m = powers_of_two(1, 64);
  EXPECT_NEAR(loglog_slope(e, sufficiency(Scheme::ERM1P, e, true)), 0.5, 0.15 * 0.5);
  EXPECT_NEAR(loglog_slope(m, sufficiency(Scheme::ERM1P, m, false)), 1.0, 0.15);
}

TEST(Sufficiency, Erm2Slopes) {
  const auto e = powers_of_two(1, 1024), m = powers_of_two(1, 64);
  EXPECT_NEAR(loglog_slope(e, sufficiency(Scheme::ERM2, e, true)), 1.0 / 3, 0.15 / 3);
  EXPECT_NEAR(loglog_slope(m, sufficiency(Scheme::ERM2, m, false)), 1.0 / 3, 0.15 / 3);
}

TEST(Sufficiency, Erm1AsPrinted) {
  // the ERM1 formula's own scaling: T linear in E, quadratic in M (log-corrected)
  const auto e = powers_of_two(1, 1024), m = powers_of_two(1, 64);
  EXPECT_NEAR(loglog_slope(e, sufficiency(Scheme::ERM1, e, true)), 1.0, 0.15);
  EXPECT_NEAR(loglog_slope(m, sufficiency(Scheme::ERM1, m, false)), 2.0, 0.3);
}

TEST(Sufficiency, ReturnsBoundaryPoint) {
  const double t = minimal_sufficient_size(Scheme::ERM1P, 3, 2.0, 0.1);
  EXPECT_LE(bound_erm1prime({3, t, 2.0, 0.1}), 1.0);
  EXPECT_GT(bound_erm1prime({3, t * (1 - 1e-9), 2.0, 0.1}), 1.0);
  EXPECT_EQ(minimal_sufficient_size(Scheme::ERM1, 3, 0.0, 0.1), 1.0);
}

TEST(LoglogSlope, ExactPowerLaw) {
  std::vector<double> x{1, 2, 5, 10}, y;
  for (double v : x) y.push_back(3 * std::pow(v, 0.7));
  EXPECT_NEAR(loglog_slope(x, y), 0.7, 1e-12);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), InvalidParameter);
  EXPECT_THROW(loglog_slope({1.0, 0.0}, {1.0, 1.0}), InvalidParameter);
}

TEST(Lipschitz, EqualCircuitsHaveZeroGaps) {
  const auto w = random_linear_optical(2, std::uint64_t{3});
  const LipschitzReport r = lipschitz_check(w, w, 1.0, 20, 5);
  EXPECT_EQ(r.trials, 20);
  EXPECT_EQ(r.violations_empirical + r.violations_erm1 + r.violations_erm2, 0);
  EXPECT_EQ(r.worst_ratio, 0.0);
}

TEST(Lipschitz, RandomPairsNeverViolate) {
  const LipschitzReport r = lipschitz_sweep(2, 1.0, 200, 7);
  EXPECT_EQ(r.trials, 200);
  EXPECT_EQ(r.violations_empirical, 0);
  EXPECT_EQ(r.violations_erm1, 0);
  EXPECT_EQ(r.violations_erm2, 0);
  EXPECT_LT(r.worst_ratio, 1.0);
  EXPECT_GT(r.worst_ratio, 0.0);
}

TEST(Lipschitz, CloseCircuitsOnOtherSizes) {
  Rng rng = make_rng(8);
  const ComplexMatrix g = haar_unitary(3, rng);
  ComplexMatrix h = g;
  h.row(0) *= std::exp(Complex(0.0, 1e-3));  // phase on one output port
  const LipschitzReport r = lipschitz_check(realify(ComplexTransfer(g)), realify(ComplexTransfer(h)), 3.0, 30, 9);
  EXPECT_EQ(r.violations_empirical + r.violations_erm1 + r.violations_erm2, 0);
}

TEST(Diagnostics, GaussianGradientBelowRadiusTimesNorm) {
  Rng rng = make_rng(10);
  for (int i = 0; i < 10; ++i) {
    const auto u = random_linear_optical(2, rng);
    const auto v = random_linear_optical(2, rng);
    const RealMatrix d = u.matrix() - v.matrix();
    const RealMatrix l = d.transpose() * d;
    const double radius = 0.5 + 2.0 * i / 10.0;
    const double g = gaussian_gradient_max(l, radius, 2000, rng);
    EXPECT_GT(g, 0.0);
    EXPECT_LE(g, radius * spectral_norm(l) + 1e-12);
  }
}

TEST(Diagnostics, RiskInputGradientBounds) {
  Rng rng = make_rng(11);
  for (int i = 0; i < 5; ++i) {
    const auto u = random_linear_optical(2, rng);
    const auto v = random_linear_optical(2, rng);
    for (double e : {0.5, 2.0, 8.0}) {
      EXPECT_LE(risk_input_gradient_max(Scheme::ERM1, u, v, 1, e, 500, rng), 4 * std::sqrt(2 * e));
      for (int t : {2, 5})
        EXPECT_LE(risk_input_gradient_max(Scheme::ERM2, u, v, t, e, 500, rng), 4 * std::sqrt(2 * e) / t);
    }
  }
}

TEST(Diagnostics, LevyTailBoundShape) {
  EXPECT_DOUBLE_EQ(levy_tail_bound(63, 0.0, 1.0), 2.0);
  EXPECT_LT(levy_tail_bound(63, 1.0, 1.0), levy_tail_bound(31, 1.0, 1.0));
  EXPECT_NEAR(levy_tail_bound(63, 0.5, 2.0), 2 * std::exp(-kC1 * 64 * 0.0625), 1e-15);
}

TEST(Diagnostics, LevyConcentrationOn64Dimensions) {
  // ERM2-style first-block function on the parent sphere, M = 2, T = 16
  Rng rng = make_rng(12);
  const auto u = random_linear_optical(2, rng);
  const auto v = random_linear_optical(2, rng);
  const RealMatrix d = u.matrix() - v.matrix();
  RealMatrix l = RealMatrix::Zero(64, 64);
  l.topLeftCorner(4, 4) = d.transpose() * d;
  const std::vector<double> etas{0.02, 0.05, 0.1, 0.2, 0.3};
  const auto points = levy_concentration(l, std::sqrt(2.0), etas, 20000, rng);
  ASSERT_EQ(points.size(), etas.size());
  double previous = 1.0;
  for (const auto& p : points) {
    EXPECT_LE(p.empirical_tail, p.bound);
    EXPECT_LE(p.empirical_tail, previous);
    previous = p.empirical_tail;
  }
}

TEST(Median, OddEvenEmpty) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}

TEST(GeneralizationExperiment, SmallGridHasNoViolations) {
  ExperimentOptions opt;
  opt.mc_samples = 4096;
  opt.probes = 4;
  for (Scheme s : {Scheme::ERM1P, Scheme::ERM2}) {
    const BoundReport r = generalization_experiment(s, 2, 1.0, {2, 8}, 0.1, 4, 3, opt);
    ASSERT_EQ(r.rows.size(), 2u);
    EXPECT_EQ(r.violation_fraction, 0.0);
    EXPECT_EQ(r.bound_value, r.rows.back().bound);
    for (const auto& row : r.rows) {
      EXPECT_EQ(row.erm_gaps.size() + static_cast<std::size_t>(row.failures), 4u);
      for (std::size_t i = 0; i < row.erm_gaps.size(); ++i) EXPECT_GE(row.uniform_gaps[i], row.erm_gaps[i]);
    }
    EXPECT_GT(r.rows[0].median_uniform_gap, r.rows[1].median_uniform_gap);
  }
}

TEST(GeneralizationExperiment, DeterministicAcrossWorkers) {
  ExperimentOptions opt;
  opt.mc_samples = 2048;
  opt.probes = 2;
  const BoundReport a = generalization_experiment(Scheme::ERM2, 2, 1.0, {3}, 0.1, 3, 5, opt);
  opt.workers = 3;
  const BoundReport b = generalization_experiment(Scheme::ERM2, 2, 1.0, {3}, 0.1, 3, 5, opt);
  EXPECT_EQ(a.rows[0].uniform_gaps, b.rows[0].uniform_gaps);
  EXPECT_EQ(a.rows[0].erm_gaps, b.rows[0].erm_gaps);
}
