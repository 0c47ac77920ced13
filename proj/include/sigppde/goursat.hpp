#pragma once

#include <array>

#include <Eigen/Dense>

#include "sigppde/paths.hpp"
#include "sigppde/static_kernels.hpp"

namespace sigppde {

enum class Scheme { PredictorCorrector, Rectangle };
enum class Traversal { Wavefront, Serial };

struct GoursatOptions {
  int dyadic_order = 2;
  Scheme scheme = Scheme::PredictorCorrector;
  // Serial is the row-major reference; both traversals produce identical results.
  Traversal traversal = Traversal::Wavefront;
  bool full_surfaces = true;
  // Smallest anti-diagonal length handed to OpenMP.
  int parallel_threshold = 256;
};

// Surfaces of kappa and its derivatives on the coarse product grid.
struct GoursatSolution {
  Eigen::MatrixXd k1;
  Eigen::MatrixXd k2;
  Eigen::MatrixXd k3;
  Eigen::MatrixXd k4;
  std::array<double, 4> corner{};
  int dyadic_order = 0;
};

GoursatSolution solve(const AField& fields, const GoursatOptions& options = {});
// Validates that the fields are shaped for (gamma, tau) and the directions share gamma's layout.
GoursatSolution solve(const Path& gamma, const Path& tau, const Path& eta, const Path& etabar,
                      const AField& fields, int dyadic_order);

double kernel_only(const Eigen::MatrixXd& a, const GoursatOptions& options = {});
double kernel_only(const Path& gamma, const Path& tau, const AField& fields, int dyadic_order);

// Corner values of d^p_eta d^q_zeta kappa for p, q <= 2.
struct BilateralCorners {
  std::array<double, 9> k{};
  double at(int p, int q) const { return k[3 * p + q]; }
};

BilateralCorners solve_bilateral(const BilateralField& fields, const GoursatOptions& options = {});

}  // namespace sigppde
