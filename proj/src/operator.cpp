#include "sigppde/operator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sigppde {

CollocationPoint::CollocationPoint(double t_, Eigen::VectorXd x_, Path gamma_, Path direction_)
    : t(t_), x(std::move(x_)), gamma(std::move(gamma_)), direction(std::move(direction_)) {
  if (!(gamma.grid() == direction.grid()) || gamma.channels() != direction.channels())
    throw std::invalid_argument("CollocationPoint: direction must share the layout of gamma");
  if (t < gamma.grid().t0() || t > gamma.grid().t1())
    throw std::invalid_argument("CollocationPoint: t outside the path grid");
  if (!x.allFinite()) throw std::invalid_argument("CollocationPoint: non-finite state");
}

Path PpdeSpec::direction_at(double t, const TimeGrid& grid, int channels) const {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(grid.n_nodes(), channels);
  if (t < grid.t1() - 1e-12 * grid.step()) v.col(0) = make_kernel_direction(t, delta, fbm, grid).values().col(0);
  return Path(grid, std::move(v));
}

CollocationPoint PpdeSpec::make_point(double t, Eigen::VectorXd x, Path gamma) const {
  Path dir = direction_at(t, gamma.grid(), gamma.channels());
  return CollocationPoint(t, std::move(x), std::move(gamma), std::move(dir));
}

Functional point_evaluation() { return {OperatorTerm{1.0, 0, 0, 0}}; }

namespace {

bool is_interior(const CollocationPoint& p, double horizon) {
  return p.t < horizon - 1e-12 * std::max(1.0, horizon);
}

double path_value_at(const CollocationPoint& p) {
  const TimeGrid& g = p.gamma.grid();
  const int k = std::clamp(static_cast<int>(std::floor((p.t - g.t0()) / g.step() + 1e-9)), 0, g.n_steps());
  return p.gamma(k, 0);
}

}  // namespace

Functional operator_terms(const PpdeSpec& spec, const CollocationPoint& omega) {
  if (!is_interior(omega, spec.horizon()))
    throw std::invalid_argument("operator_terms: the point lies on the terminal boundary");
  if (spec.kind == PpdeKind::FbmHeat) return {OperatorTerm{1.0, 1, 0, 0}, OperatorTerm{0.5, 0, 0, 2}};
  if (omega.x.size() < 1) throw std::invalid_argument("operator_terms: rough Bergomi needs a log-price state");
  const double psi = spec.bergomi.variance(omega.t, path_value_at(omega));
  return {OperatorTerm{1.0, 1, 0, 0}, OperatorTerm{0.5 * psi, 0, 2, 0}, OperatorTerm{-0.5 * psi, 0, 1, 0},
          OperatorTerm{0.5, 0, 0, 2}, OperatorTerm{spec.bergomi.rho * std::sqrt(psi), 0, 1, 1}};
}

PreparedPoint prepare(const CollocationPoint& omega) {
  PreparedPoint p{omega.t, omega.x, omega.gamma.values().row(0).transpose(),
                  time_augment(omega.gamma.recentered()), time_augment(omega.direction)};
  Eigen::MatrixXd dir = p.aug_dir.values();
  dir.col(0).setZero();
  p.aug_dir = Path(omega.direction.grid(), std::move(dir));
  return p;
}

SigDerivatives signature_derivatives(const PreparedPoint& left, const PreparedPoint& right, int max_p, int max_q,
                                     const KernelConfig& cfg) {
  if (max_p < 0 || max_p > 2 || max_q < 0 || max_q > 2)
    throw std::invalid_argument("signature_derivatives: orders must lie in [0,2]");
  GoursatOptions opt;
  opt.dyadic_order = cfg.dyadic_order;
  opt.full_surfaces = false;
  Lift lift = cfg.lift;
  if (lift.kind == Lift::Kind::Rbf) lift.sigma = cfg.params.sigma_g;
  SigDerivatives out;
  if (max_p == 0 && max_q == 0) {
    const auto f = bilateral_fields(left.aug, right.aug, left.aug_dir, right.aug_dir, lift, 0, 0);
    out.k[0] = kernel_only(f.at(0, 0), opt);
    return out;
  }
  if (max_q == 0 || max_p == 0) {
    const bool swap = max_p == 0;
    const PreparedPoint& a = swap ? right : left;
    const PreparedPoint& b = swap ? left : right;
    const auto f = bilateral_fields(a.aug, b.aug, a.aug_dir, b.aug_dir, lift, std::max(max_p, max_q), 0);
    AField af{f.at(0, 0), f.at(1, 0), f.at(1, 0), f.at(2, 0)};
    const auto sol = solve(af, opt);
    const double vals[3] = {sol.corner[0], sol.corner[1], sol.corner[3]};
    for (int o = 0; o <= std::max(max_p, max_q); ++o) out.k[swap ? o : 3 * o] = vals[o];
    return out;
  }
  const auto f = bilateral_fields(left.aug, right.aug, left.aug_dir, right.aug_dir, lift, max_p, max_q);
  const auto corners = solve_bilateral(f, opt);
  out.k = corners.k;
  return out;
}

int max_order(const Functional& f) {
  int m = 0;
  for (const auto& t : f) m = std::max(m, t.dg);
  return m;
}

double combine(const Functional& left_terms, const Functional& right_terms, const PreparedPoint& left,
               const PreparedPoint& right, const SigDerivatives& sig, const RbfParams& params) {
  if (left.x.size() != right.x.size()) throw std::invalid_argument("combine: state dimension mismatch");
  const Eigen::Index dim = left.x.size();
  if (static_cast<Eigen::Index>(params.sigma_x.size()) < dim)
    throw std::invalid_argument("combine: missing state bandwidths");
  double rest = rbf(std::span<const double>(left.start.data(), left.start.size()),
                    std::span<const double>(right.start.data(), right.start.size()), params.sigma_l);
  for (Eigen::Index c = 1; c < dim; ++c) rest *= rbf_1d_derivative(0, left.x(c) - right.x(c), params.sigma_x[c]);
  const double dtime = left.t - right.t;
  const double dx0 = dim > 0 ? left.x(0) - right.x(0) : 0.0;
  double acc = 0.0;
  for (const auto& a : left_terms) {
    for (const auto& b : right_terms) {
      if ((a.dx > 0 || b.dx > 0) && dim == 0) throw std::invalid_argument("combine: x-derivative without state");
      const double sign = ((b.dt + b.dx) % 2 == 0) ? 1.0 : -1.0;
      const double ft = rbf_1d_derivative(a.dt + b.dt, dtime, params.sigma_t);
      const double fx = dim > 0 ? rbf_1d_derivative(a.dx + b.dx, dx0, params.sigma_x[0]) : 1.0;
      acc += a.coef * b.coef * sign * ft * fx * sig.at(a.dg, b.dg);
    }
  }
  return acc * rest;
}

double product_kernel(const CollocationPoint& a, const CollocationPoint& b, const KernelConfig& cfg) {
  cfg.params.validate(static_cast<int>(a.x.size()));
  const auto pa = prepare(a);
  const auto pb = prepare(b);
  const auto sig = signature_derivatives(pa, pb, 0, 0, cfg);
  return combine(point_evaluation(), point_evaluation(), pa, pb, sig, cfg.params);
}

double apply_L(const PpdeSpec& spec, const CollocationPoint& omega_i, const CollocationPoint& omega_j,
               const KernelConfig& cfg, Side side) {
  cfg.params.validate(static_cast<int>(omega_i.x.size()));
  const Functional left = operator_terms(spec, omega_i);
  const Functional right = side == Side::Both ? operator_terms(spec, omega_j) : point_evaluation();
  const auto pi = prepare(omega_i);
  const auto pj = prepare(omega_j);
  const auto sig = signature_derivatives(pi, pj, max_order(left), max_order(right), cfg);
  return combine(left, right, pi, pj, sig, cfg.params);
}

}  // namespace sigppde
