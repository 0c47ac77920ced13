#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sigppde/goursat.hpp"
#include "sigppde/paths.hpp"
#include "sigppde/static_kernels.hpp"

namespace sigppde {

// A state omega = (t, x, gamma) with the direction used by pathwise derivatives at t.
struct CollocationPoint {
  double t = 0.0;
  Eigen::VectorXd x;
  Path gamma;
  Path direction;

  CollocationPoint(double t, Eigen::VectorXd x, Path gamma, Path direction);
};

enum class PpdeKind { FbmHeat, RoughBergomi };

using PointFunction = std::function<double(const CollocationPoint&)>;

// Linear PPDE L u = source on [0, T), u = terminal at T.
//   FbmHeat:      L = d_t + 1/2 d^2_gamma
//   RoughBergomi: L = d_t + psi/2 (d^2_x - d_x) + 1/2 d^2_gamma + rho sqrt(psi) d_x d_gamma
struct PpdeSpec {
  PpdeKind kind = PpdeKind::FbmHeat;
  FbmSpec fbm = FbmSpec::normalized(0.5, 1.0);
  BergomiParams bergomi;
  PointFunction source;    // empty means zero
  PointFunction terminal;  // empty means zero
  double delta = 0.0;

  double horizon() const noexcept { return fbm.horizon; }
  double source_at(const CollocationPoint& p) const { return source ? source(p) : 0.0; }
  double terminal_at(const CollocationPoint& p) const { return terminal ? terminal(p) : 0.0; }
  // Direction attached to a point at time t on the given grid (zero path at the horizon).
  Path direction_at(double t, const TimeGrid& grid, int channels = 1) const;
  CollocationPoint make_point(double t, Eigen::VectorXd x, Path gamma) const;
};

struct KernelConfig {
  RbfParams params;
  Lift lift;  // the RBF lift bandwidth is taken from params.sigma_g
  int dyadic_order = 2;
  double nugget = 0.0;  // G gains nugget * trace(G) on its diagonal before factorisation
};

// coef * d_t^dt d_x^dx d_gamma^dg, with d_x acting on the first state coordinate.
struct OperatorTerm {
  double coef = 1.0;
  int dt = 0;
  int dx = 0;
  int dg = 0;
};

using Functional = std::vector<OperatorTerm>;

// Evaluation functional u -> u(omega).
Functional point_evaluation();
// Terms of L at omega; omega must be interior.
Functional operator_terms(const PpdeSpec& spec, const CollocationPoint& omega);

// Per-point data reused across kernel evaluations.
struct PreparedPoint {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd start;
  Path aug;      // time-augmented, recentred path
  Path aug_dir;  // direction with a zero time channel
};

PreparedPoint prepare(const CollocationPoint& omega);

// Corner values d^p d^q kappa_sig for p <= max_p (left direction), q <= max_q (right direction).
struct SigDerivatives {
  std::array<double, 9> k{};
  double at(int p, int q) const { return k[3 * p + q]; }
};

SigDerivatives signature_derivatives(const PreparedPoint& left, const PreparedPoint& right, int max_p, int max_q,
                                     const KernelConfig& cfg);

int max_order(const Functional& f);

// L_left L_right kappa(left, right) from precomputed signature derivatives.
double combine(const Functional& left_terms, const Functional& right_terms, const PreparedPoint& left,
               const PreparedPoint& right, const SigDerivatives& sig, const RbfParams& params);

double product_kernel(const CollocationPoint& a, const CollocationPoint& b, const KernelConfig& cfg);

enum class Side { Left, Both };

// Side::Left applies L at omega_i to the first argument of kappa(., omega_j);
// Side::Both additionally applies L at omega_j to the second argument.
double apply_L(const PpdeSpec& spec, const CollocationPoint& omega_i, const CollocationPoint& omega_j,
               const KernelConfig& cfg, Side side);

}  // namespace sigppde
