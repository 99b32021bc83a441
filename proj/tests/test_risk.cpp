#include <gtest/gtest.h>

#include <linopt/risk.hpp>

using namespace linopt;

namespace {

TrainingSet single_state(const RealVector& x) {
  TrainingSet s;
  s.scheme = Scheme::ERM1;
  s.mode_count = static_cast<int>(x.size() / 2);
  s.energy = 0.5 * x.squaredNorm();
  s.states.emplace_back(x);
  return s;
}

// Independent risk evaluation straight from the definition, in R^{2M}.
double risk_by_definition(const TrainingSet& s, const RealMatrix& o_u, const RealMatrix& o_v) {
  double sum = 0.0;
  for (const auto& x : s.states) {
    const RealVector d = (o_u - o_v) * x.components();
    sum += 1.0 - std::exp(-0.5 * d.squaredNorm());
  }
  return sum / s.size();
}

ComplexMatrix random_complex(int m, Rng& rng) {
  const RealVector v = standard_normal(2 * m * m, rng);
  ComplexMatrix g(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) g(i, j) = Complex(v[i * m + j], v[m * m + i * m + j]) * 0.6;
  return g;
}

}  // namespace

TEST(EmpiricalRisk, ZeroAtTarget) {
  const auto target = random_linear_optical(3, std::uint64_t{4});
  const TrainingSet s = sample_training_set(Scheme::ERM1, 3, 5, 2.0, std::uint64_t{1});
  const RiskReport r = empirical_risk(s, target, complexify(target));
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.per_term.size(), 5u);
}

TEST(EmpiricalRisk, ZeroEnergyGivesZero) {
  const auto target = random_linear_optical(2, std::uint64_t{4});
  const TrainingSet s = sample_training_set(Scheme::ERM2, 2, 3, 0.0, std::uint64_t{1});
  EXPECT_EQ(empirical_risk(s, target, ComplexTransfer::identity(2)).value, 0.0);
}

TEST(EmpiricalRisk, OppositeSignSingleMode) {
  RealVector x(2);
  x << 1.0, 1.0;
  const TrainingSet s = single_state(x);
  const SymplecticOrthogonal id = realify(ComplexTransfer::identity(1));
  const ComplexMatrix minus = -ComplexMatrix::Identity(1, 1);
  EXPECT_NEAR(empirical_risk(s, id, ComplexTransfer(minus)).value, 1.0 - std::exp(-4.0), 1e-15);
  EXPECT_NEAR(1.0 - std::exp(-4.0), 0.98168, 1e-5);
}

TEST(EmpiricalRisk, MatchesDefinitionOffManifold) {
  Rng rng = make_rng(21);
  for (int m = 1; m <= 4; ++m) {
    const auto target = random_linear_optical(m, rng);
    const TrainingSet s = sample_training_set(Scheme::ERM1, m, 4, 1.5, rng);
    const ComplexMatrix g = random_complex(m, rng);  // not unitary
    EXPECT_NEAR(empirical_risk(s, target, ComplexTransfer(g)).value,
                risk_by_definition(s, target.matrix(), realify_unchecked(g)), 1e-14);
  }
}

TEST(EmpiricalRisk, JointLeftMultiplicationInvariant) {
  Rng rng = make_rng(3);
  const auto target = random_linear_optical(3, rng);
  const auto ansatz = random_linear_optical(3, rng);
  const ComplexMatrix q = haar_unitary(3, rng);
  const TrainingSet s = sample_training_set(Scheme::ERM1, 3, 6, 1.0, rng);
  const double a = empirical_risk(s, target, complexify(ansatz)).value;
  const SymplecticOrthogonal qt = realify(ComplexTransfer(q * complexify(target).matrix()));
  const double b = empirical_risk(s, qt, ComplexTransfer(q * complexify(ansatz).matrix())).value;
  EXPECT_NEAR(a, b, 1e-13);
}

TEST(EmpiricalRisk, DimensionMismatch) {
  const auto target = random_linear_optical(2, std::uint64_t{4});
  const TrainingSet s = sample_training_set(Scheme::ERM1, 3, 2, 1.0, std::uint64_t{1});
  EXPECT_THROW(empirical_risk(s, target, ComplexTransfer::identity(3)), DimensionMismatch);
  const TrainingSet s2 = sample_training_set(Scheme::ERM1, 2, 2, 1.0, std::uint64_t{1});
  EXPECT_THROW(empirical_risk(s2, target, ComplexTransfer::identity(3)), DimensionMismatch);
}

TEST(Gradient, ZeroAtTarget) {
  const auto target = random_linear_optical(3, std::uint64_t{8});
  const TrainingSet s = sample_training_set(Scheme::ERM2, 3, 4, 2.0, std::uint64_t{2});
  EXPECT_LT(empirical_risk_gradient(s, target, complexify(target)).norm(), 1e-15);
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng = make_rng(99);
  for (int inst = 0; inst < 10; ++inst) {
    const int m = 1 + inst % 4;
    const auto target = random_linear_optical(m, rng);
    const TrainingSet s = sample_training_set(Scheme::ERM1, m, 4, 0.8, rng);
    const ComplexMatrix g = complexify(random_linear_optical(m, rng)).matrix() + 0.1 * random_complex(m, rng);
    const RealVector analytic = empirical_risk_gradient(s, target, ComplexTransfer(g));
    const RealVector theta = pack_parameters(g);
    ASSERT_EQ(analytic.size(), 2 * m * m);
    RealVector numeric(theta.size());
    const double h = 1e-5;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      RealVector tp = theta, tm = theta;
      tp[k] += h;
      tm[k] -= h;
      const double fp = risk_by_definition(s, target.matrix(), realify_unchecked(unpack_parameters(tp, m)));
      const double fm = risk_by_definition(s, target.matrix(), realify_unchecked(unpack_parameters(tm, m)));
      numeric[k] = (fp - fm) / (2 * h);
    }
    EXPECT_LT((analytic - numeric).norm() / numeric.norm(), 1e-5) << "instance " << inst;
  }
}

TEST(Gradient, VanishesAsEnergyGoesToZero) {
  const auto target = random_linear_optical(2, std::uint64_t{8});
  const auto other = random_linear_optical(2, std::uint64_t{9});
  double previous = INFINITY;
  for (double e : {1.0, 1e-2, 1e-4, 1e-6}) {
    const TrainingSet s = sample_training_set(Scheme::ERM1, 2, 4, e, std::uint64_t{2});
    const double n = empirical_risk_gradient(s, target, complexify(other)).norm();
    EXPECT_LT(n, previous);
    previous = n;
  }
  EXPECT_LT(previous, 1e-5);
}

TEST(PackParameters, RoundTrip) {
  Rng rng = make_rng(1);
  const ComplexMatrix g = random_complex(3, rng);
  const RealVector theta = pack_parameters(g);
  EXPECT_EQ(theta[1], g(0, 1).real());
  EXPECT_EQ(theta[9 + 3], g(1, 0).imag());
  EXPECT_EQ((unpack_parameters(theta, 3) - g).norm(), 0.0);
}

TEST(FullRiskMc, EqualCircuitsGiveZero) {
  const auto u = random_linear_optical(2, std::uint64_t{5});
  const McEstimate est = full_risk_mc(Scheme::ERM1, u, u, 2, 1, 1.0, 1000, 3);
  EXPECT_EQ(est.estimate, 0.0);
  EXPECT_EQ(est.standard_error, 0.0);
}

TEST(FullRiskMc, Erm2SingleBlockIsErm1) {
  const auto u = random_linear_optical(2, std::uint64_t{5});
  const auto v = random_linear_optical(2, std::uint64_t{6});
  const McEstimate a = full_risk_mc(Scheme::ERM1, u, v, 2, 1, 1.0, 50000, 3);
  const McEstimate b = full_risk_mc(Scheme::ERM2, u, v, 2, 1, 1.0, 50000, 3);
  EXPECT_LT(std::abs(a.estimate - b.estimate), 3 * a.standard_error + 1e-15);
}

TEST(FullRiskMc, DeterministicAcrossWorkers) {
  const auto u = random_linear_optical(2, std::uint64_t{5});
  const auto v = random_linear_optical(2, std::uint64_t{6});
  const McEstimate a = full_risk_mc(Scheme::ERM2, u, v, 2, 3, 1.0, 70000, 11, 1);
  const McEstimate b = full_risk_mc(Scheme::ERM2, u, v, 2, 3, 1.0, 70000, 11, 3);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.standard_error, b.standard_error);
  EXPECT_EQ(a.samples, 70000);
}

TEST(FullRiskMc, RejectsTooFewSamples) {
  const auto u = random_linear_optical(1, std::uint64_t{5});
  EXPECT_THROW(full_risk_mc(Scheme::ERM1, u, u, 1, 1, 1.0, 1, 3), InvalidParameter);
}

TEST(SeriesFullRisk, EqualCircuitsGiveZero) {
  const auto u = random_linear_optical(3, std::uint64_t{5});
  const SeriesResult r = series_full_risk(u, u, 2.0, 3, 50);
  EXPECT_EQ(r.complement, 1.0);
  EXPECT_EQ(r.value, 0.0);
}

TEST(SeriesFullRisk, OppositeCircuitMatchesMc) {
  const auto u = random_linear_optical(1, std::uint64_t{5});
  const SymplecticOrthogonal v = realify(ComplexTransfer(-complexify(u).matrix()));
  const SeriesResult s = series_full_risk(u, v, 0.5, 1, 200);
  // |x|^2 = 1 on the whole sphere, so C = 1 - e^{-2} exactly
  EXPECT_NEAR(s.value, 1.0 - std::exp(-2.0), 1e-10);
  const McEstimate mc = full_risk_mc(Scheme::ERM1, u, v, 1, 1, 0.5, 1000000, 7);
  EXPECT_LT(std::abs(s.value - mc.estimate), 3 * mc.standard_error + s.error_estimate + 1e-12);
}

TEST(SeriesFullRisk, SingleModeClosedForm) {
  // M = 1: the difference is a multiple of an orthogonal matrix, so the
  // integrand is constant: C = 1 - exp(-E kappa^2)
  Rng rng = make_rng(17);
  for (int i = 0; i < 5; ++i) {
    const auto u = random_linear_optical(1, rng);
    const auto v = random_linear_optical(1, rng);
    const double e = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const SeriesResult s = series_full_risk(u, v, e, 1, 400);
    const double k2 = (u.matrix() - v.matrix()).squaredNorm() / 2.0;
    EXPECT_NEAR(s.value, 1.0 - std::exp(-e * k2), 1e-10);
  }
}

TEST(SeriesFullRisk, MonotoneInEnergy) {
  const auto u = random_linear_optical(2, std::uint64_t{5});
  const auto v = random_linear_optical(2, std::uint64_t{6});
  double previous = 0.0;
  for (double e = 0.1; e <= 4.0 + 1e-9; e += 0.1) {
    const double c = series_full_risk(u, v, e, 2, 400).value;
    EXPECT_GT(c, previous);
    previous = c;
  }
}

TEST(SeriesFullRisk, TwoModesMatchMc) {
  Rng rng = make_rng(29);
  for (int i = 0; i < 3; ++i) {
    const auto u = random_linear_optical(2, rng);
    const auto v = random_linear_optical(2, rng);
    const SeriesResult s = series_full_risk(u, v, 1.0, 2, 400);
    const McEstimate mc = full_risk_mc(Scheme::ERM1, u, v, 2, 1, 1.0, 200000, 100 + i);
    EXPECT_LT(std::abs(s.value - mc.estimate), 4 * mc.standard_error) << i;
  }
}

TEST(SeriesFullRisk, Erm2BlocksMatchMc) {
  const auto u = random_linear_optical(2, std::uint64_t{41});
  const auto v = random_linear_optical(2, std::uint64_t{42});
  const SeriesResult s = series_full_risk(u, v, 2.0, 2, 400, 3);
  const McEstimate mc = full_risk_mc(Scheme::ERM2, u, v, 2, 3, 2.0, 200000, 5);
  EXPECT_LT(std::abs(s.value - mc.estimate), 4 * mc.standard_error);
}

TEST(SeriesFullRisk, LowOrderWarns) {
  const auto u = random_linear_optical(1, std::uint64_t{5});
  const SymplecticOrthogonal v = realify(ComplexTransfer(-complexify(u).matrix()));
  EXPECT_TRUE(series_full_risk(u, v, 2.0, 1, 3).convergence_warning);
  EXPECT_THROW(series_full_risk(u, v, 2.0, 1, 0), InvalidParameter);
}

TEST(SwapTest, EqualCircuitsNeverClick) {
  const auto u = random_linear_optical(2, std::uint64_t{5});
  const TrainingSet s = sample_training_set(Scheme::ERM1, 2, 4, 3.0, std::uint64_t{1});
  const RiskReport r = swap_test_risk(s, u, complexify(u), ShotModel{50, 3});
  EXPECT_EQ(r.value, 0.0);
  ASSERT_TRUE(r.shots.has_value());
  EXPECT_EQ(*r.shots, 50);
}

TEST(SwapTest, ManyShotsApproachEmpiricalRisk) {
  const auto u = random_linear_optical(2, std::uint64_t{5});
  const auto v = random_linear_optical(2, std::uint64_t{6});
  const TrainingSet s = sample_training_set(Scheme::ERM1, 2, 4, 1.0, std::uint64_t{1});
  const double exact = empirical_risk(s, u, complexify(v)).value;
  const double est = swap_test_risk(s, u, complexify(v), ShotModel{1000000, 9}).value;
  EXPECT_LT(std::abs(est - exact), 5e-3);
}

TEST(SwapTest, SingleShotTermsAreBinary) {
  const auto u = random_linear_optical(2, std::uint64_t{5});
  const auto v = random_linear_optical(2, std::uint64_t{6});
  const TrainingSet s = sample_training_set(Scheme::ERM1, 2, 40, 1.0, std::uint64_t{1});
  const RiskReport r = swap_test_risk(s, u, complexify(v), ShotModel{1, 2});
  for (double t : r.per_term) EXPECT_TRUE(t == 0.0 || t == 1.0);
}

TEST(SwapTest, RejectsNonUnitary) {
  const auto u = random_linear_optical(1, std::uint64_t{5});
  const TrainingSet s = sample_training_set(Scheme::ERM1, 1, 2, 1.0, std::uint64_t{1});
  EXPECT_THROW(swap_test_risk(s, u, ComplexTransfer(2.0 * ComplexMatrix::Identity(1, 1)), ShotModel{}),
               NonUnitaryInput);
}

TEST(SwapTest, EstimatorBiasMatchesBinomialVariance) {
  // mean of (k/n)^2 with k ~ Bin(n, p) is p^2 + p(1-p)/n
  const int shots = 10, reps = 200000;
  RealVector a(2), b(2);
  a << 0.0, 0.0;
  b << std::sqrt(4.0 * std::log(2.0)), 0.0;  // mu = ln 2, p = 1/2, F = 1/4
  const double f = std::exp(-0.5 * (a - b).squaredNorm());
  const double p = std::sqrt(f);
  Rng rng = make_rng(77);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < reps; ++i) {
    const double v = swap_test_fidelity(a, b, shots, rng);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
  const double bias = mean - f;
  EXPECT_GT(bias, 0.0);
  EXPECT_NEAR(bias, p * (1 - p) / shots, 4 * se);
  EXPECT_LE(bias - 4 * se, p * (1 - p) / shots);
}
