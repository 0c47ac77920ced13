#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sigppde/linalg.hpp"
#include "sigppde/static_kernels.hpp"

using namespace sigppde;

namespace {

std::span<const double> sp(const std::vector<double>& v) { return {v.data(), v.size()}; }

Path random_path(const TimeGrid& g, int channels, std::mt19937_64& rng, double scale = 0.3) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd v(g.n_nodes(), channels);
  for (int k = 0; k < g.n_nodes(); ++k)
    for (int c = 0; c < channels; ++c) v(k, c) = (k ? v(k - 1, c) : 0.0) + n(rng);
  return Path(g, v);
}

}  // namespace

TEST(Rbf, UnitOnDiagonalAndAtOneSigma) {
  const std::vector<double> x{0.3, -1.2};
  EXPECT_EQ(rbf(sp(x), sp(x), 0.7), 1.0);
  const std::vector<double> y{0.3 + 0.6, -1.2 + 0.8};  // distance 1
  EXPECT_NEAR(rbf(sp(x), sp(y), 1.0), 0.606531, 1e-6);
}

TEST(Rbf, SymmetricAndBounded) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x{n(rng), n(rng), n(rng)}, y{n(rng), n(rng), n(rng)};
    const double a = rbf(sp(x), sp(y), 0.9), b = rbf(sp(y), sp(x), 0.9);
    EXPECT_EQ(a, b);
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(Rbf, DimensionMismatchThrows) {
  const std::vector<double> x{1.0}, y{1.0, 2.0};
  EXPECT_THROW(rbf(sp(x), sp(y), 1.0), std::invalid_argument);
  EXPECT_THROW(rbf_dx(sp(x), sp(y), 1.0), std::invalid_argument);
}

TEST(RbfDerivatives, ClosedFormsAtSpecialPoints) {
  const std::vector<double> x{0.4};
  EXPECT_EQ(rbf_dx(sp(x), sp(x), 0.5)(0), 0.0);
  EXPECT_NEAR(rbf_dxx(sp(x), sp(x), 0.5)(0, 0), -1.0 / 0.25, 1e-14);
  const std::vector<double> y{0.9};
  EXPECT_NEAR(rbf_dxx(sp(x), sp(y), 0.5)(0, 0), 0.0, 1e-15);
}

TEST(RbfDerivatives, MatchCentralDifferences) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  const double sigma = 0.8, h = 1e-5 * sigma;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x{n(rng), n(rng)}, y{n(rng), n(rng)};
    const Eigen::VectorXd g = rbf_dx(sp(x), sp(y), sigma);
    const Eigen::MatrixXd H = rbf_dxx(sp(x), sp(y), sigma);
    for (int c = 0; c < 2; ++c) {
      auto xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      const double fd = (rbf(sp(xp), sp(y), sigma) - rbf(sp(xm), sp(y), sigma)) / (2 * h);
      EXPECT_NEAR(g(c), fd, 1e-6 * std::max(std::abs(fd), 1e-3));
      const Eigen::VectorXd gp = rbf_dx(sp(xp), sp(y), sigma), gm = rbf_dx(sp(xm), sp(y), sigma);
      for (int r = 0; r < 2; ++r) {
        const double fd2 = (gp(r) - gm(r)) / (2 * h);
        EXPECT_NEAR(H(r, c), fd2, 1e-4 * std::max(std::abs(fd2), 1e-2));
      }
    }
  }
}

TEST(RbfDerivatives, HermiteOneDimensionalOrders) {
  const double s = 0.7;
  for (double d : {-1.1, -0.2, 0.0, 0.35, 1.4}) {
    const double g = std::exp(-d * d / (2 * s * s));
    // d/dx of exp(-(x-y)^2/2s^2) with diff = x - y.
    EXPECT_NEAR(rbf_1d_derivative(0, d, s), g, 1e-15);
    EXPECT_NEAR(rbf_1d_derivative(1, d, s), -d / (s * s) * g, 1e-14);
    EXPECT_NEAR(rbf_1d_derivative(2, d, s), (d * d - s * s) / std::pow(s, 4) * g, 1e-13);
    const double h = 1e-4;
    const double fd3 = (rbf_1d_derivative(2, d + h, s) - rbf_1d_derivative(2, d - h, s)) / (2 * h);
    EXPECT_NEAR(rbf_1d_derivative(3, d, s), fd3, 1e-5 * std::max(1.0, std::abs(fd3)));
    const double fd4 = (rbf_1d_derivative(3, d + h, s) - rbf_1d_derivative(3, d - h, s)) / (2 * h);
    EXPECT_NEAR(rbf_1d_derivative(4, d, s), fd4, 1e-5 * std::max(1.0, std::abs(fd4)));
  }
}

TEST(Rbf, GramIsPositiveSemidefinite) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 40; ++i) pts.push_back({n(rng), n(rng)});
  Eigen::MatrixXd G(40, 40);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) G(i, j) = rbf(sp(pts[i]), sp(pts[j]), 0.5);
  EXPECT_GE(linalg::min_eigenvalue(G), -1e-10 * G.trace());
}

TEST(RbfParams, ValidatesBandwidths) {
  RbfParams p;
  p.sigma_x = {1.0};
  EXPECT_NO_THROW(p.validate(1));
  EXPECT_THROW(p.validate(2), std::invalid_argument);
  p.sigma_t = 0.0;
  EXPECT_THROW(p.validate(1), std::invalid_argument);
}

TEST(AFields, ZeroDirectionGivesZeroFields) {
  const TimeGrid g(0, 1, 6);
  std::mt19937_64 rng(4);
  const Path gamma = random_path(g, 2, rng), tau = random_path(g, 2, rng);
  const Path zero = Path::zeros(g, 2);
  for (const Lift& lift : {Lift::identity(), Lift::rbf(0.8)}) {
    const auto f = a_fields(gamma, tau, zero, zero, lift);
    EXPECT_EQ(f.a_eta.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(f.a_etabar.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(f.a_eta_etabar.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(AFields, LinearPathsGiveConstantIncrements) {
  const int n = 8;
  const TimeGrid g(0, 1, n);
  Eigen::MatrixXd v(n + 1, 1);
  for (int k = 0; k <= n; ++k) v(k, 0) = g.node(k);
  const Path p(g, v);
  const auto f = a_fields(p, p, p, p, Lift::identity());
  EXPECT_NEAR((f.a.array() - 1.0 / (n * n)).abs().maxCoeff(), 0.0, 1e-16);
  EXPECT_EQ(f.a_eta_etabar.cwiseAbs().maxCoeff(), 0.0);
}

TEST(AFields, IdentityLiftIsAdditiveInDirections) {
  const TimeGrid g(0, 1, 5);
  std::mt19937_64 rng(5);
  const Path gamma = random_path(g, 2, rng), tau = random_path(g, 2, rng);
  const Path e1 = random_path(g, 2, rng), e2 = random_path(g, 2, rng);
  const auto f1 = a_fields(gamma, tau, e1, e1, Lift::identity());
  const auto f2 = a_fields(gamma, tau, e2, e2, Lift::identity());
  const auto f12 = a_fields(gamma, tau, e1.plus(e2), e1.plus(e2), Lift::identity());
  EXPECT_LT((f12.a_eta - f1.a_eta - f2.a_eta).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AFields, RbfLiftIsBilinearInDirections) {
  const TimeGrid g(0, 1, 5);
  std::mt19937_64 rng(6);
  const Path gamma = random_path(g, 2, rng), tau = random_path(g, 2, rng);
  const Path e1 = random_path(g, 2, rng), e2 = random_path(g, 2, rng), eb = random_path(g, 2, rng);
  const Lift lift = Lift::rbf(0.9);
  const auto f1 = a_fields(gamma, tau, e1, eb, lift);
  const auto f2 = a_fields(gamma, tau, e2, eb, lift);
  const auto f12 = a_fields(gamma, tau, e1.plus(e2), eb, lift);
  const double scale = std::max(f12.a_eta.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((f12.a_eta - f1.a_eta - f2.a_eta).cwiseAbs().maxCoeff(), 1e-8 * scale);
  EXPECT_LT((f12.a_eta_etabar - f1.a_eta_etabar - f2.a_eta_etabar).cwiseAbs().maxCoeff(),
            1e-8 * std::max(f12.a_eta_etabar.cwiseAbs().maxCoeff(), 1e-12));
}

TEST(AFields, RbfLiftApproachesIdentityForWideBandwidth) {
  const TimeGrid g(0, 1, 6);
  std::mt19937_64 rng(7);
  const Path gamma = random_path(g, 2, rng), tau = random_path(g, 2, rng);
  const double s = 1e3;
  const auto fr = a_fields(gamma, tau, gamma, tau, Lift::rbf(s));
  const auto fi = a_fields(gamma, tau, gamma, tau, Lift::identity());
  // g(x, y) = exp(-|x-y|^2 / 2 s^2) has <d_x, d_y> g ~ 1 / s^2 at leading order.
  const Eigen::MatrixXd rescaled = fr.a * (s * s);
  const double scale = fi.a.cwiseAbs().maxCoeff();
  EXPECT_LT((rescaled - fi.a).cwiseAbs().maxCoeff(), 1e-4 * scale);
}

TEST(AFields, GridMismatchThrows) {
  const Path a = Path::zeros(TimeGrid(0, 1, 4), 1);
  const Path b = Path::zeros(TimeGrid(0, 1, 5), 1);
  EXPECT_THROW(a_fields(a, a, b, b, Lift::identity()), std::invalid_argument);
}

TEST(BilateralFields, IdentityLiftMatchesIncrementProducts) {
  const TimeGrid g(0, 1, 5);
  std::mt19937_64 rng(8);
  const Path gamma = random_path(g, 2, rng), tau = random_path(g, 2, rng);
  const Path eta = random_path(g, 2, rng), zeta = random_path(g, 2, rng);
  const auto f = bilateral_fields(gamma, tau, eta, zeta, Lift::identity());
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      EXPECT_NEAR(f.at(0, 0)(i, j), gamma.increment(i).dot(tau.increment(j)), 1e-15);
      EXPECT_NEAR(f.at(1, 0)(i, j), eta.increment(i).dot(tau.increment(j)), 1e-15);
      EXPECT_NEAR(f.at(0, 1)(i, j), gamma.increment(i).dot(zeta.increment(j)), 1e-15);
      EXPECT_NEAR(f.at(1, 1)(i, j), eta.increment(i).dot(zeta.increment(j)), 1e-15);
    }
  EXPECT_FALSE(f.nonzero[3 * 2 + 0]);
}
