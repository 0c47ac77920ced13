#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sigppde/paths.hpp"

namespace sigppde {

// Bandwidths of the product kernel factors.
struct RbfParams {
  double sigma_t = 0.5;
  std::vector<double> sigma_x;
  double sigma_g = 1.0;
  double sigma_l = 1.0;

  // Throws unless every bandwidth is positive and sigma_x has `state_dim` entries.
  void validate(int state_dim) const;
};

double rbf(std::span<const double> x, std::span<const double> y, double sigma);
// Gradient in x.
Eigen::VectorXd rbf_dx(std::span<const double> x, std::span<const double> y, double sigma);
// Hessian in x.
Eigen::MatrixXd rbf_dxx(std::span<const double> x, std::span<const double> y, double sigma);

// d^n/dx^n exp(-(x - y)^2 / (2 sigma^2)) with diff = x - y, n <= 4.
double rbf_1d_derivative(int order, double diff, double sigma);

// Up to four directions v_i, stored as projections z.v_i and pairwise products v_i.v_j.
struct DirectionSet {
  int order = 0;
  double proj[4] = {};
  double dots[4][4] = {};
};

// Directional derivative D^n f(z)[v_1, ..., v_n] of f(z) = exp(-|z|^2 / (2 sigma^2)), with f = f(z).
double gaussian_directional(double f, double inv_sigma2, const DirectionSet& dirs);

struct Lift {
  enum class Kind { Identity, Rbf };
  Kind kind = Kind::Identity;
  double sigma = 1.0;

  static Lift identity() { return {}; }
  static Lift rbf(double sigma);
};

// Per-cell increments feeding the Goursat scheme.
struct AField {
  Eigen::MatrixXd a;
  Eigen::MatrixXd a_eta;
  Eigen::MatrixXd a_etabar;
  Eigen::MatrixXd a_eta_etabar;
};

// eta and etabar perturb gamma; tau is held fixed.
AField a_fields(const Path& gamma, const Path& tau, const Path& eta, const Path& etabar, const Lift& lift);

// A-fields for derivatives in both arguments: at(p, q) carries p directional derivatives along eta
// in the first argument and q along zeta in the second, p, q <= 2.
struct BilateralField {
  std::array<Eigen::MatrixXd, 9> a;
  std::array<bool, 9> nonzero{};

  const Eigen::MatrixXd& at(int p, int q) const { return a[3 * p + q]; }
  Eigen::Index rows() const { return a[0].rows(); }
  Eigen::Index cols() const { return a[0].cols(); }
};

// max_p / max_q bound the derivative orders that are needed (fields beyond are left zero).
BilateralField bilateral_fields(const Path& gamma, const Path& tau, const Path& eta, const Path& zeta,
                                const Lift& lift, int max_p = 2, int max_q = 2);

}  // namespace sigppde
