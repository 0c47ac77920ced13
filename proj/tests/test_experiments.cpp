#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sigppde/experiments.hpp"

using namespace sigppde;

namespace {

// Trapezoid rule for E[f(theta + s Z)].
double gauss_expectation(const std::function<double(double)>& f, double theta, double s) {
  const int n = 200000;
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / n;
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double z = lo + k * h;
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    acc += w * f(theta + s * z) * std::exp(-0.5 * z * z);
  }
  return acc * h / std::sqrt(2.0 * std::numbers::pi);
}

double black_scholes_call(double spot, double strike, double total_var) {
  const double sd = std::sqrt(total_var);
  const double d1 = (std::log(spot / strike) + 0.5 * total_var) / sd;
  auto N = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  return spot * N(d1) - strike * N(d1 - sd);
}

ExperimentConfig small_fbm() {
  ExperimentConfig c;
  c.n_steps = 16;
  c.m = 10;
  c.n = 6;
  c.eval_count = 8;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(AnalyticPrice, ClosedFormExamples) {
  EXPECT_DOUBLE_EQ(analytic_fbm_price(Payoff{PayoffKind::Identity}, 0.3, 0.2, 1.0, 0.1), 0.3);
  for (double H : {0.1, 0.3, 0.5})
    EXPECT_NEAR(analytic_fbm_price(Payoff{PayoffKind::Exp, 1.0}, 0.0, 0.0, 1.0, H), 1.648721, 1e-6);
  for (double H : {0.1, 0.4})
    EXPECT_NEAR(analytic_fbm_price(Payoff{PayoffKind::Call, 1.0, 0.25}, 0.25, 0.0, 1.0, H), 0.398942, 1e-6);
  EXPECT_NEAR(analytic_fbm_price(Payoff{PayoffKind::Abs}, 0.0, 0.0, 1.0, 0.1), std::sqrt(2.0 / std::numbers::pi),
              1e-12);
}

TEST(AnalyticPrice, AgreesWithQuadrature) {
  const double t = 0.3, T = 1.0, H = 0.1, s = std::pow(T - t, H);
  for (double theta : {-0.7, -0.1, 0.0, 0.4, 1.2}) {
    const Payoff call{PayoffKind::Call, 1.0, 0.2}, absp{PayoffKind::Abs}, expp{PayoffKind::Exp, 0.8};
    EXPECT_NEAR(analytic_fbm_price(call, theta, t, T, H), gauss_expectation(call, theta, s), 1e-8);
    EXPECT_NEAR(analytic_fbm_price(absp, theta, t, T, H), gauss_expectation(absp, theta, s), 1e-8);
    EXPECT_NEAR(analytic_fbm_price(expp, theta, t, T, H), gauss_expectation(expp, theta, s), 1e-8);
  }
}

TEST(AnalyticPrice, TerminalTimeReturnsPayoff) {
  const Payoff call{PayoffKind::Call, 1.0, 0.1};
  EXPECT_DOUBLE_EQ(analytic_fbm_price(call, 0.5, 1.0, 1.0, 0.1), 0.4);
  EXPECT_THROW(analytic_fbm_price(call, 0.5, 1.1, 1.0, 0.1), std::invalid_argument);
}

TEST(NormalCdf, Accuracy) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.0), 0.8413447460685429, 1e-12);
  EXPECT_NEAR(normal_cdf(-2.5), 0.0062096653257761, 1e-12);
}

TEST(Config, RoundTripAndValidation) {
  nlohmann::json j = {{"kind", "bergomi"}, {"payoff", {{"type", "call"}, {"strike", 1.0}}}, {"m", 20}, {"seed", 11}};
  const auto c = ExperimentConfig::from_json(j);
  EXPECT_EQ(c.kind, ExperimentKind::Bergomi);
  EXPECT_EQ(c.payoff.kind, PayoffKind::Call);
  EXPECT_EQ(c.m, 20);
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_THROW(ExperimentConfig::from_json({{"bogus", 1}}), std::invalid_argument);
  EXPECT_THROW(ExperimentConfig::from_json({{"m", 0}, {"n", 0}}), std::invalid_argument);
  EXPECT_THROW(ExperimentConfig::from_json({{"mc_paths", 0}}), std::invalid_argument);
  EXPECT_THROW(ExperimentConfig::from_json({{"payoff", {{"type", "digital"}}}}), std::invalid_argument);
  EXPECT_THROW(ExperimentConfig::from_json({{"m", "many"}}), std::invalid_argument);
  EXPECT_THROW(ExperimentConfig::from_json({{"nugget", -1e-8}}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(ExperimentConfig::from_json({{"nugget", 0.0}}).nugget, 0.0);
}

TEST(Config, DefaultBandwidths) {
  ExperimentConfig c;
  c.kind = ExperimentKind::Bergomi;
  c.x_min = -1.0;
  c.x_max = 0.6;
  const auto p = c.default_bandwidths();
  EXPECT_DOUBLE_EQ(p.sigma_t, 0.3);
  ASSERT_EQ(p.sigma_x.size(), 1u);
  EXPECT_DOUBLE_EQ(p.sigma_x[0], 0.8);
  EXPECT_DOUBLE_EQ(p.sigma_g, 32.0);
}

TEST(Sampling, PointsLieOnTheRightSideOfTheHorizon) {
  const auto c = small_fbm();
  const auto d = sample_experiment(c);
  ASSERT_EQ(d.interior.size(), 10u);
  ASSERT_EQ(d.boundary.size(), 6u);
  for (const auto& p : d.interior) {
    EXPECT_GT(p.t, 0.0);
    EXPECT_LT(p.t, 1.0);
  }
  for (const auto& p : d.boundary) {
    EXPECT_EQ(p.t, 1.0);
    const auto& v = p.gamma.values();
    // Zero before the horizon; the terminal node carries the conditional mean of the terminal value.
    EXPECT_EQ(v.topRows(v.rows() - 1).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NE(v(v.rows() - 1, 0), 0.0);
  }
}

TEST(RunFbm, ZeroPayoffGivesZeroPredictions) {
  auto c = small_fbm();
  c.payoff.kind = PayoffKind::Zero;
  const auto r = run_fbm(c);
  for (const auto& p : r.points) EXPECT_NEAR(p.predicted, 0.0, 1e-8);
  EXPECT_NEAR(r.mse, 0.0, 1e-16);
}

TEST(RunFbm, DeterministicReports) {
  const auto c = small_fbm();
  const auto a = run_fbm(c), b = run_fbm(c);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(a.points_csv(), b.points_csv());
  EXPECT_FALSE(a.to_json().contains("runtime_ms"));
}

TEST(RunFbm, SummaryMatchesPointTable) {
  const auto r = run_fbm(small_fbm());
  double se = 0.0, ae = 0.0;
  for (const auto& p : r.points) {
    EXPECT_EQ(p.abs_error, std::abs(p.predicted - p.oracle));
    se += p.abs_error * p.abs_error;
    ae += p.abs_error;
  }
  const double n = static_cast<double>(r.points.size());
  EXPECT_EQ(r.mse, se / n);
  EXPECT_EQ(r.mae, ae / n);
  EXPECT_GE(r.mse, 0.0);
  EXPECT_LE(r.mae * r.mae, r.mse + 1e-300);
}

TEST(RunFbm, SharedAssemblyMatchesSeparateRuns) {
  auto c = small_fbm();
  const std::vector<Payoff> ps{Payoff{PayoffKind::Identity}, Payoff{PayoffKind::Exp, 0.5}};
  const auto both = run_fbm_payoffs(c, ps);
  c.payoff = ps[1];
  const auto single = run_fbm(c);
  ASSERT_EQ(both.size(), 2u);
  for (std::size_t e = 0; e < single.points.size(); ++e)
    EXPECT_NEAR(both[1].points[e].predicted, single.points[e].predicted, 1e-10);
}

TEST(RunFbm, StartShiftOnlyActsThroughStartKernel) {
  auto c = small_fbm();
  // Constant boundary paths coincide once the start kernel is flat, so keep one.
  c.n = 1;
  auto d = sample_experiment(c);
  KernelConfig kc;
  kc.params = c.default_bandwidths();
  kc.params.sigma_l = 1e6;
  kc.dyadic_order = c.dyadic_order;
  const auto base = assemble(make_problem(d.spec, d.interior, d.boundary, kc));
  const auto model = solve_linear(base);
  auto shift = [&](std::vector<CollocationPoint> pts) {
    for (auto& p : pts) {
      const Path up(p.gamma.grid(), Eigen::MatrixXd::Constant(p.gamma.n_nodes(), 1, 0.8));
      p = d.spec.make_point(p.t, p.x, p.gamma.plus(up));
    }
    return pts;
  };
  auto shifted = assemble(make_problem(d.spec, shift(d.interior), shift(d.boundary), kc));
  shifted.b = base.b;
  const auto moved = solve_linear(shifted);
  const auto p0 = model.predict(d.evaluation);
  const auto p1 = moved.predict(shift(d.evaluation));
  EXPECT_EQ(base.jitter_used, 0.0);
  EXPECT_LT((p0 - p1).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(MonteCarlo, ConstantVarianceIsBlackScholes) {
  const TimeGrid g(0, 1, 32);
  BergomiParams p;
  p.vol_of_vol = 0.0;
  p.xi = 0.04;
  const Path gamma = Path::zeros(g, 1);
  const double x = 0.05, t = 0.25;
  for (double rho : {-0.9, 0.3}) {
    p.rho = rho;
    const auto mc = mc_bergomi_price(t, x, gamma, p, Payoff{PayoffKind::Call, 1.0, 1.0}, 20000, g, 5);
    const double bs = black_scholes_call(std::exp(x), 1.0, p.xi * (1.0 - t));
    EXPECT_NEAR(mc.price, bs, 3.0 * mc.std_error);
    EXPECT_GT(mc.std_error, 0.0);
  }
}

TEST(MonteCarlo, ZeroStrikeIsMartingale) {
  const TimeGrid g(0, 1, 32);
  const BergomiParams p;
  std::mt19937_64 rng(3);
  const auto inc = brownian_increments(g, rng);
  const Path gamma =
      simulate_theta(0.5, FbmSpec::normalized(p.hurst, 1.0), g, inc, {KernelWeights::VarianceMatched, PreTimeFill::Hold});
  const auto mc = mc_bergomi_price(0.5, -0.1, gamma, p, Payoff{PayoffKind::Call, 1.0, 0.0}, 20000, g, 8);
  EXPECT_NEAR(mc.price, std::exp(-0.1), 3.0 * mc.std_error);
}

TEST(MonteCarlo, HugeStrikeIsWorthless) {
  const TimeGrid g(0, 1, 32);
  const auto mc = mc_bergomi_price(0.0, 0.0, Path::zeros(g, 1), BergomiParams{}, Payoff{PayoffKind::Call, 1.0, 1e6},
                                   2000, g, 9);
  EXPECT_NEAR(mc.price, 0.0, 3.0 * mc.std_error + 1e-300);
}

TEST(MonteCarlo, DeterministicUnderSeed) {
  const TimeGrid g(0, 1, 16);
  const BergomiParams p;
  const Payoff call{PayoffKind::Call, 1.0, 1.0};
  const auto a = mc_bergomi_price(0.25, 0.0, Path::zeros(g, 1), p, call, 3000, g, 42);
  const auto b = mc_bergomi_price(0.25, 0.0, Path::zeros(g, 1), p, call, 3000, g, 42);
  EXPECT_EQ(a.price, b.price);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(CrossValidation, SingletonGridIsReturned) {
  auto c = small_fbm();
  BandwidthGrid grid{{0.7}, {1.0}, {2.0}, {1.0}};
  const auto best = cross_validate(c, grid);
  EXPECT_DOUBLE_EQ(best.sigma_t, 0.7);
  EXPECT_DOUBLE_EQ(best.sigma_l, 2.0);
}

TEST(CrossValidation, DeterministicUnderSeed) {
  auto c = small_fbm();
  BandwidthGrid grid{{0.25, 0.5, 1.0}, {1.0}, {0.5, 1.0}, {1.0}};
  const auto a = cross_validate(c, grid), b = cross_validate(c, grid);
  EXPECT_EQ(a.sigma_t, b.sigma_t);
  EXPECT_EQ(a.sigma_l, b.sigma_l);
}

TEST(CrossValidation, SelectsManufacturedBandwidths) {
  auto c = small_fbm();
  c.m = 16;
  c.n = 12;
  const auto d = sample_experiment(c);
  KernelConfig kc;
  kc.params = c.default_bandwidths();
  kc.params.sigma_t = 0.3;
  kc.lift = Lift::rbf(kc.params.sigma_g);
  kc.dyadic_order = c.dyadic_order;
  auto truth_sys = assemble(make_problem(d.spec, d.interior, d.boundary, kc));
  // Data from a function in the span of the representers of the manufactured bandwidths.
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  Eigen::VectorXd beta(static_cast<Eigen::Index>(truth_sys.size()));
  for (Eigen::Index k = 0; k < beta.size(); ++k) beta(k) = n(rng);
  truth_sys.b = truth_sys.G * beta;
  std::vector<RbfParams> cands;
  for (double st : {3.0, 1.0, 0.3, 0.1}) {
    RbfParams p = kc.params;
    p.sigma_t = st;
    cands.push_back(p);
  }
  const auto res = cross_validate(truth_sys, cands, 5, 7);
  EXPECT_DOUBLE_EQ(res.best.sigma_t, 0.3);
}

TEST(BandwidthGrid, CandidatesOrderedLargestFirst) {
  BandwidthGrid g{{0.5, 2.0}, {1.0}, {0.1, 1.0}, {1.0}};
  const auto c = g.candidates(0);
  ASSERT_EQ(c.size(), 4u);
  EXPECT_DOUBLE_EQ(c.front().sigma_t, 2.0);
  EXPECT_DOUBLE_EQ(c.front().sigma_l, 1.0);
  EXPECT_DOUBLE_EQ(c.back().sigma_t, 0.5);
  EXPECT_THROW((BandwidthGrid{{}, {1.0}, {1.0}, {1.0}}.candidates(0)), std::invalid_argument);
}
