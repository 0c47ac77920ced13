#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sigppde/errors.hpp"
#include "sigppde/linalg.hpp"
#include "sigppde/paths.hpp"

using namespace sigppde;

namespace {

Path line(const TimeGrid& g, std::initializer_list<double> slopes) {
  Eigen::MatrixXd v(g.n_nodes(), static_cast<Eigen::Index>(slopes.size()));
  for (int k = 0; k < g.n_nodes(); ++k) {
    int c = 0;
    for (double s : slopes) v(k, c++) = s * g.node(k);
  }
  return Path(g, v);
}

struct Moments {
  double mean = 0.0, var = 0.0, se_var = 0.0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m4 = 0.0;
  for (double v : x) {
    const double d = (v - m.mean) * (v - m.mean);
    m.var += d;
    m4 += d * d;
  }
  m.var /= n - 1.0;
  m4 /= n;
  m.se_var = std::sqrt((m4 - m.var * m.var) / n);
  return m;
}

}  // namespace

TEST(TimeGrid, NodesAreUniformAndIncreasing) {
  const TimeGrid g(0.5, 2.5, 8);
  EXPECT_DOUBLE_EQ(g.step(), 0.25);
  for (int k = 0; k < g.n_steps(); ++k) EXPECT_LT(g.node(k), g.node(k + 1));
  EXPECT_DOUBLE_EQ(g.node(8), 2.5);
  EXPECT_EQ(g.index_of(1.0), 2);
  EXPECT_THROW(g.index_of(1.1), std::invalid_argument);
}

TEST(TimeGrid, RejectsBadLayouts) {
  EXPECT_THROW(TimeGrid(1.0, 1.0, 4), std::invalid_argument);
  EXPECT_THROW(TimeGrid(0.0, 1.0, 0), std::invalid_argument);
}

TEST(Path, RejectsNonFiniteAndWrongShape) {
  const TimeGrid g(0, 1, 4);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(5, 1);
  v(2, 0) = std::nan("");
  EXPECT_THROW(Path(g, v), std::invalid_argument);
  EXPECT_THROW(Path(g, Eigen::MatrixXd::Zero(4, 1)), std::invalid_argument);
}

TEST(KernelDirection, HalfHurstIsConstantOne) {
  const TimeGrid g(0, 1, 16);
  const FbmSpec spec(0.5, 1.0, 1.0);
  for (double t : {0.0, 0.25, 0.5}) {
    const Path d = make_kernel_direction(t, 0.0, spec, g);
    for (int k = 0; k < g.n_nodes(); ++k) EXPECT_DOUBLE_EQ(d(k, 0), g.node(k) > t ? 1.0 : 0.0);
  }
}

TEST(KernelDirection, RoughValueAtHorizon) {
  const TimeGrid g(0, 1, 16);
  const Path d = make_kernel_direction(0.0, 0.0, FbmSpec::normalized(0.1, 1.0), g);
  EXPECT_NEAR(d(16, 0), 0.447214, 1e-6);
  EXPECT_EQ(d(0, 0), 0.0);
  EXPECT_GT(d(1, 0), 0.0);
}

TEST(KernelDirection, TruncationClampsTheArgument) {
  const TimeGrid g(0, 1, 16);
  const FbmSpec spec = FbmSpec::normalized(0.1, 1.0);
  const Path d = make_kernel_direction(0.0, 0.25, spec, g);
  const double ref = spec.kernel(0.25);
  for (int k = 4; k < g.n_nodes(); ++k) EXPECT_DOUBLE_EQ(d(k, 0), ref);
}

TEST(KernelDirection, NonincreasingForRoughKernel) {
  const TimeGrid g(0, 1, 32);
  const Path d = make_kernel_direction(0.25, 0.0, FbmSpec::normalized(0.2, 1.0), g);
  for (int k = 9; k < g.n_steps(); ++k) EXPECT_GE(d(k, 0), d(k + 1, 0));
}

TEST(KernelDirection, ShiftModeEvaluatesOffsetKernel) {
  const TimeGrid g(0, 1, 8);
  const FbmSpec spec = FbmSpec::normalized(0.1, 1.0);
  const Path d = make_kernel_direction(0.25, 0.0, spec, g, DirectionMode::Shift, 0.01);
  EXPECT_DOUBLE_EQ(d(2, 0), 0.0);
  EXPECT_NEAR(d(4, 0), spec.kernel(0.26), 1e-14);
}

TEST(KernelDirection, RejectsBadArguments) {
  const TimeGrid g(0, 1, 8);
  const FbmSpec spec = FbmSpec::normalized(0.1, 1.0);
  EXPECT_THROW(make_kernel_direction(1.0, 0.0, spec, g), std::invalid_argument);
  EXPECT_THROW(make_kernel_direction(-0.1, 0.0, spec, g), std::invalid_argument);
  EXPECT_THROW(make_kernel_direction(0.0, -0.1, spec, g), std::invalid_argument);
}

TEST(Theta, ZeroAtGridStart) {
  const TimeGrid g(0, 1, 8);
  std::mt19937_64 rng(1);
  const auto inc = brownian_increments(g, rng);
  const Path th = simulate_theta(0.0, FbmSpec::normalized(0.3, 1.0), g, inc);
  EXPECT_EQ(th.values().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Theta, BrownianCaseFreezesTheDriver) {
  const TimeGrid g(0, 1, 8);
  std::mt19937_64 rng(2);
  const auto inc = brownian_increments(g, rng);
  const Path th = simulate_theta(0.5, FbmSpec(0.5, 1.0, 1.0), g, inc);
  const double w = inc[0] + inc[1] + inc[2] + inc[3];
  for (int k = 0; k < g.n_nodes(); ++k) EXPECT_NEAR(th(k, 0), k > 4 ? w : 0.0, 1e-15);
}

TEST(Theta, HoldFillCopiesTheValueAtT) {
  const TimeGrid g(0, 1, 8);
  std::mt19937_64 rng(3);
  const auto inc = brownian_increments(g, rng);
  const FbmSpec spec = FbmSpec::normalized(0.1, 1.0);
  const Path zero = simulate_theta(0.5, spec, g, inc);
  const Path hold = simulate_theta(0.5, spec, g, inc, {KernelWeights::LeftPoint, PreTimeFill::Hold});
  for (int k = 5; k < g.n_nodes(); ++k) EXPECT_EQ(zero(k, 0), hold(k, 0));
  for (int k = 0; k < 4; ++k) EXPECT_EQ(hold(k, 0), hold(4, 0));
}

TEST(Theta, RejectsIncrementCountMismatch) {
  const TimeGrid g(0, 1, 8);
  std::vector<double> inc(7, 0.0);
  EXPECT_THROW(simulate_theta(0.5, FbmSpec::normalized(0.3, 1.0), g, inc), std::invalid_argument);
}

TEST(Theta, DeterministicForFixedSeed) {
  const TimeGrid g(0, 1, 32);
  const FbmSpec spec = FbmSpec::normalized(0.1, 1.0);
  std::mt19937_64 r1(11), r2(11);
  const Path a = simulate_theta(0.5, spec, g, brownian_increments(g, r1));
  const Path b = simulate_theta(0.5, spec, g, brownian_increments(g, r2));
  EXPECT_TRUE((a.values().array() == b.values().array()).all());
}

class ThetaVariance : public ::testing::TestWithParam<double> {};

// Var(Theta^t_s) = s^{2H} - (s - t)^{2H}; variance-matched weights integrate K^2 exactly per cell.
TEST_P(ThetaVariance, MatchesItoIsometry) {
  const double H = GetParam();
  const TimeGrid g(0, 1, 16);
  const FbmSpec spec = FbmSpec::normalized(H, 1.0);
  std::mt19937_64 rng(100 + static_cast<int>(H * 10));
  const double t = 0.5, s = 0.75;
  std::vector<double> xs;
  for (int i = 0; i < 10000; ++i) {
    const Path th = simulate_theta(t, spec, g, brownian_increments(g, rng), {KernelWeights::VarianceMatched});
    xs.push_back(th(g.index_of(s), 0));
  }
  const auto m = moments(xs);
  const double ref = std::pow(s, 2 * H) - std::pow(s - t, 2 * H);
  EXPECT_NEAR(m.var, ref, 3.0 * m.se_var);
}

TEST_P(ThetaVariance, LeftPointWithinDiscretisationBias) {
  const double H = GetParam();
  const TimeGrid g(0, 1, 64);
  const FbmSpec spec = FbmSpec::normalized(H, 1.0);
  std::mt19937_64 rng(200 + static_cast<int>(H * 10));
  const double t = 0.5, s = 1.0;
  std::vector<double> xs;
  for (int i = 0; i < 10000; ++i)
    xs.push_back(simulate_theta(t, spec, g, brownian_increments(g, rng))(g.n_steps(), 0));
  const auto m = moments(xs);
  const double ref = std::pow(s, 2 * H) - std::pow(s - t, 2 * H);
  // Left-point bias is bounded by the kernel variation over one cell next to t.
  const double bias = std::abs(spec.kernel(s - t) * spec.kernel(s - t) - spec.kernel(s - t + g.step()) *
                                                                          spec.kernel(s - t + g.step())) * t;
  EXPECT_NEAR(m.var, ref, 3.0 * m.se_var + bias);
}

INSTANTIATE_TEST_SUITE_P(Hurst, ThetaVariance, ::testing::Values(0.1, 0.3, 0.5));

TEST(Volterra, BrownianCaseIsCumulativeSum) {
  const TimeGrid g(0, 1, 8);
  std::mt19937_64 rng(4);
  const auto inc = brownian_increments(g, rng);
  const FbmSpec spec(0.5, 1.0, 1.0);
  for (auto mode : {VolterraMode::Convolution, VolterraMode::ExactCovariance}) {
    const Path w = simulate_volterra(spec, g, inc, {mode, KernelWeights::VarianceMatched});
    double acc = 0.0;
    EXPECT_EQ(w(0, 0), 0.0);
    for (int k = 0; k < g.n_steps(); ++k) {
      acc += inc[static_cast<std::size_t>(k)];
      EXPECT_NEAR(w(k + 1, 0), acc, 1e-12);
    }
  }
}

TEST(Volterra, StartsAtZero) {
  const TimeGrid g(0, 1, 16);
  std::mt19937_64 rng(5);
  const Path w = simulate_volterra(FbmSpec::normalized(0.1, 1.0), g, brownian_increments(g, rng));
  EXPECT_EQ(w(0, 0), 0.0);
}

TEST(Volterra, MidpointWeightsAvailable) {
  const TimeGrid g(0, 1, 16);
  std::mt19937_64 rng(6);
  const auto inc = brownian_increments(g, rng);
  const FbmSpec spec = FbmSpec::normalized(0.3, 1.0);
  const Path w = simulate_volterra(spec, g, inc, {VolterraMode::Convolution, KernelWeights::Midpoint});
  const double h = g.step();
  EXPECT_NEAR(w(1, 0), spec.kernel(0.5 * h) * inc[0], 1e-14);
  EXPECT_THROW(simulate_volterra(spec, g, inc, {VolterraMode::Convolution, KernelWeights::LeftPoint}),
               std::invalid_argument);
}

class VolterraVariance : public ::testing::TestWithParam<double> {};

TEST_P(VolterraVariance, ExactModeTerminalVariance) {
  const double H = GetParam();
  const TimeGrid g(0, 1, 16);
  const FbmSpec spec = FbmSpec::normalized(H, 1.0);
  std::mt19937_64 rng(300 + static_cast<int>(H * 10));
  std::vector<double> xs;
  for (int i = 0; i < 10000; ++i)
    xs.push_back(simulate_volterra(spec, g, brownian_increments(g, rng), {VolterraMode::ExactCovariance})(16, 0));
  const auto m = moments(xs);
  EXPECT_NEAR(m.var, 1.0, 3.0 * m.se_var);
}

TEST_P(VolterraVariance, ForwardIntegralVariance) {
  const double H = GetParam();
  const TimeGrid g(0, 1, 16);
  const FbmSpec spec = FbmSpec::normalized(H, 1.0);
  std::mt19937_64 rng(400 + static_cast<int>(H * 10));
  const double t = 0.25;
  std::vector<double> xs;
  for (int i = 0; i < 10000; ++i) xs.push_back(simulate_forward_volterra(t, spec, g, brownian_increments(g, rng))(16, 0));
  const auto m = moments(xs);
  EXPECT_NEAR(m.var, std::pow(1.0 - t, 2 * H), 3.0 * m.se_var);
}

INSTANTIATE_TEST_SUITE_P(Hurst, VolterraVariance, ::testing::Values(0.1, 0.3, 0.5));

TEST(Volterra, CovarianceDiagonalIsPowerLaw) {
  const FbmSpec spec = FbmSpec::normalized(0.1, 1.0);
  const Eigen::MatrixXd c = volterra_covariance(spec, 0.125, 8);
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(c(k, k), std::pow(0.125 * (k + 1), 0.2), 1e-10);
  EXPECT_TRUE(linalg::is_symmetric(c, 1e-12));
  EXPECT_GT(linalg::min_eigenvalue(c), 0.0);
}

TEST(ForwardVolterra, ZeroBeforeStartAndMatchesFullIntegralAtOrigin) {
  const TimeGrid g(0, 1, 16);
  std::mt19937_64 rng(7);
  const auto inc = brownian_increments(g, rng);
  const FbmSpec spec = FbmSpec::normalized(0.1, 1.0);
  const Path fwd = simulate_forward_volterra(0.5, spec, g, inc);
  for (int k = 0; k <= 8; ++k) EXPECT_EQ(fwd(k, 0), 0.0);
  const Path full = simulate_volterra(spec, g, inc);
  const Path at0 = simulate_forward_volterra(0.0, spec, g, inc);
  EXPECT_TRUE((full.values().array() == at0.values().array()).all());
}

TEST(ForwardVolterra, ThetaPlusForwardEqualsFullPath) {
  const TimeGrid g(0, 1, 32);
  std::mt19937_64 rng(8);
  const auto inc = brownian_increments(g, rng);
  const FbmSpec spec = FbmSpec::normalized(0.1, 1.0);
  const double t = 0.375;
  const Path th = simulate_theta(t, spec, g, inc, {KernelWeights::VarianceMatched, PreTimeFill::Zero});
  const Path fwd = simulate_forward_volterra(t, spec, g, inc);
  const Path full = simulate_volterra(spec, g, inc);
  for (int k = g.index_of(t) + 1; k < g.n_nodes(); ++k) EXPECT_NEAR(th(k, 0) + fwd(k, 0), full(k, 0), 1e-13);
}

TEST(Norms, ConstantPathHasNoVariation) {
  const TimeGrid g(0, 1, 4);
  EXPECT_EQ(one_variation(Path(g, Eigen::MatrixXd::Constant(5, 2, 3.0))), 0.0);
}

TEST(Norms, TentPath) {
  const TimeGrid g(0, 1, 2);
  Eigen::MatrixXd v(3, 1);
  v << 0, 1, 0;
  const Path p(g, v);
  EXPECT_DOUBLE_EQ(one_variation(p), 2.0);
  EXPECT_DOUBLE_EQ(sup_norm(p), 1.0);
}

TEST(Norms, LinearPathLength) {
  EXPECT_NEAR(one_variation(line(TimeGrid(0, 1, 7), {1.0, 2.0})), std::sqrt(5.0), 1e-14);
}

TEST(Norms, HomogeneityAndTriangleInequality) {
  const TimeGrid g(0, 1, 10);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd a(11, 2), b(11, 2);
    for (int k = 0; k < 11; ++k)
      for (int c = 0; c < 2; ++c) {
        a(k, c) = n(rng);
        b(k, c) = n(rng);
      }
    const Path p(g, a), q(g, b);
    EXPECT_NEAR(one_variation(p.scaled(-2.5)), 2.5 * one_variation(p), 1e-12);
    EXPECT_LE(sup_norm(p.plus(q)), sup_norm(p) + sup_norm(q) + 1e-12);
  }
}

TEST(TimeAugment, PrependsNormalisedTime) {
  const TimeGrid g(0, 1, 4);
  const Path p = time_augment(Path(g, Eigen::MatrixXd::Ones(5, 1)));
  ASSERT_EQ(p.channels(), 2);
  const double expect[] = {0, 0.25, 0.5, 0.75, 1.0};
  for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(p(k, 0), expect[k]);
  EXPECT_EQ(time_augment(p).channels(), 3);
}

TEST(TimeAugment, ConstantPathGainsUnitVariation) {
  for (double T : {0.5, 1.0, 3.0}) {
    const TimeGrid g(0, T, 9);
    EXPECT_NEAR(one_variation(time_augment(Path(g, Eigen::MatrixXd::Constant(10, 1, 2.0)))), 1.0, 1e-14);
  }
}

TEST(Bergomi, ValidatesParameters) {
  BergomiParams p;
  EXPECT_NO_THROW(p.validate());
  p.rho = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.rho = 0.0;
  p.xi = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Bergomi, VarianceFormula) {
  const BergomiParams p;
  const double t = 0.5, y = 0.3;
  EXPECT_NEAR(p.variance(t, y), p.xi * std::exp(p.vol_of_vol * y - 0.5 * p.vol_of_vol * p.vol_of_vol * std::pow(t, 0.2)),
              1e-15);
}

TEST(Linalg, JitterLadderRecoversSemidefiniteMatrix) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(3, 3);
  const auto c = linalg::jittered_cholesky(a);
  EXPECT_GT(c.jitter, 0.0);
  EXPECT_LE(c.jitter, 1e-6 * 3.0);
  Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(linalg::jittered_cholesky(neg), NumericalError);
}
