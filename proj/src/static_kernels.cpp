#include "sigppde/static_kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace sigppde {

void RbfParams::validate(int state_dim) const {
  if (!(sigma_t > 0.0) || !(sigma_g > 0.0) || !(sigma_l > 0.0))
    throw std::invalid_argument("RbfParams: bandwidths must be positive");
  if (static_cast<int>(sigma_x.size()) != state_dim)
    throw std::invalid_argument("RbfParams: sigma_x size must match the state dimension");
  for (double s : sigma_x)
    if (!(s > 0.0)) throw std::invalid_argument("RbfParams: bandwidths must be positive");
}

namespace {

void check_dims(std::span<const double> x, std::span<const double> y, double sigma) {
  if (x.size() != y.size()) throw std::invalid_argument("rbf: dimension mismatch");
  if (!(sigma > 0.0)) throw std::invalid_argument("rbf: sigma must be positive");
}

}  // namespace

double rbf(std::span<const double> x, std::span<const double> y, double sigma) {
  check_dims(x, y, sigma);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

Eigen::VectorXd rbf_dx(std::span<const double> x, std::span<const double> y, double sigma) {
  const double g = rbf(x, y, sigma);
  Eigen::VectorXd out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) out(i) = (y[i] - x[i]) / (sigma * sigma) * g;
  return out;
}

Eigen::MatrixXd rbf_dxx(std::span<const double> x, std::span<const double> y, double sigma) {
  const double g = rbf(x, y, sigma);
  const auto n = static_cast<Eigen::Index>(x.size());
  const double s2 = sigma * sigma;
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = ((x[i] - y[i]) * (x[j] - y[j]) / (s2 * s2) - (i == j ? 1.0 / s2 : 0.0)) * g;
  return out;
}

double rbf_1d_derivative(int order, double diff, double sigma) {
  const double u = diff / sigma;
  const double g = std::exp(-0.5 * u * u);
  double he = 0.0;
  switch (order) {
    case 0: return g;
    case 1: he = u; break;
    case 2: he = u * u - 1.0; break;
    case 3: he = u * u * u - 3.0 * u; break;
    case 4: he = u * u * u * u - 6.0 * u * u + 3.0; break;
    default: throw std::invalid_argument("rbf_1d_derivative: order must be in [0,4]");
  }
  const double sign = (order % 2 == 0) ? 1.0 : -1.0;
  return sign * he * g / std::pow(sigma, order);
}

namespace {

// Sum over partial pairings of the index set `mask`.
double pairing_sum(unsigned mask, double inv_sigma2, const DirectionSet& d) {
  if (mask == 0) return 1.0;
  int a = 0;
  while (!(mask & (1u << a))) ++a;
  const unsigned rest = mask & ~(1u << a);
  double acc = -d.proj[a] * inv_sigma2 * pairing_sum(rest, inv_sigma2, d);
  for (int b = a + 1; b < 4; ++b) {
    if (!(rest & (1u << b))) continue;
    acc += -d.dots[a][b] * inv_sigma2 * pairing_sum(rest & ~(1u << b), inv_sigma2, d);
  }
  return acc;
}

}  // namespace

double gaussian_directional(double f, double inv_sigma2, const DirectionSet& dirs) {
  if (dirs.order < 0 || dirs.order > 4) throw std::invalid_argument("gaussian_directional: order must be in [0,4]");
  return f * pairing_sum((1u << dirs.order) - 1u, inv_sigma2, dirs);
}

Lift Lift::rbf(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("Lift::rbf: sigma must be positive");
  return Lift{Kind::Rbf, sigma};
}

namespace {

void check_layout(const Path& gamma, const Path& tau, const Path& eta, const Path& zeta) {
  if (gamma.channels() != tau.channels())
    throw std::invalid_argument("a_fields: channel mismatch between gamma and tau");
  if (!(eta.grid() == gamma.grid()) || eta.channels() != gamma.channels())
    throw std::invalid_argument("a_fields: direction must share the grid and channels of gamma");
  if (!(zeta.grid() == tau.grid()) || zeta.channels() != tau.channels())
    throw std::invalid_argument("a_fields: direction must share the grid and channels of its path");
}

Eigen::MatrixXd increments(const Path& p) {
  return p.values().bottomRows(p.n_nodes() - 1) - p.values().topRows(p.n_nodes() - 1);
}

Eigen::MatrixXd double_difference(const Eigen::MatrixXd& node) {
  const Eigen::Index r = node.rows() - 1;
  const Eigen::Index c = node.cols() - 1;
  return node.bottomRightCorner(r, c) - node.bottomLeftCorner(r, c) - node.topRightCorner(r, c) +
         node.topLeftCorner(r, c);
}

// Node values (-1)^q D^{p+q} f(gamma_i - tau_j)[left..., right...] for the Gaussian lift.
Eigen::MatrixXd rbf_node_values(const Path& gamma, const Path& tau, std::span<const Path* const> left,
                                std::span<const Path* const> right, double sigma) {
  const int n = gamma.n_nodes();
  const int m = tau.n_nodes();
  const int d = gamma.channels();
  const int order = static_cast<int>(left.size() + right.size());
  const double inv_s2 = 1.0 / (sigma * sigma);
  const double sign = (right.size() % 2 == 0) ? 1.0 : -1.0;
  Eigen::MatrixXd out(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      DirectionSet ds;
      ds.order = order;
      double z2 = 0.0;
      for (int c = 0; c < d; ++c) {
        const double z = gamma(i, c) - tau(j, c);
        z2 += z * z;
      }
      const double f = std::exp(-0.5 * z2 * inv_s2);
      auto dir_row = [&](int a, int c) {
        return a < static_cast<int>(left.size()) ? (*left[a])(i, c) : (*right[a - left.size()])(j, c);
      };
      for (int a = 0; a < order; ++a) {
        double pz = 0.0;
        for (int c = 0; c < d; ++c) pz += (gamma(i, c) - tau(j, c)) * dir_row(a, c);
        ds.proj[a] = pz;
        for (int b = a + 1; b < order; ++b) {
          double dd = 0.0;
          for (int c = 0; c < d; ++c) dd += dir_row(a, c) * dir_row(b, c);
          ds.dots[a][b] = dd;
          ds.dots[b][a] = dd;
        }
      }
      out(i, j) = sign * gaussian_directional(f, inv_s2, ds);
    }
  }
  return out;
}

}  // namespace

AField a_fields(const Path& gamma, const Path& tau, const Path& eta, const Path& etabar, const Lift& lift) {
  check_layout(gamma, tau, eta, tau);
  if (!(etabar.grid() == gamma.grid()) || etabar.channels() != gamma.channels())
    throw std::invalid_argument("a_fields: direction must share the grid and channels of gamma");
  AField out;
  if (lift.kind == Lift::Kind::Identity) {
    const Eigen::MatrixXd dt = increments(tau);
    out.a = increments(gamma) * dt.transpose();
    out.a_eta = increments(eta) * dt.transpose();
    out.a_etabar = increments(etabar) * dt.transpose();
    out.a_eta_etabar = Eigen::MatrixXd::Zero(out.a.rows(), out.a.cols());
    return out;
  }
  const Path* none[1] = {nullptr};
  const Path* e[1] = {&eta};
  const Path* eb[1] = {&etabar};
  const Path* both[2] = {&eta, &etabar};
  std::span<const Path* const> empty(none, 0);
  out.a = double_difference(rbf_node_values(gamma, tau, empty, empty, lift.sigma));
  out.a_eta = double_difference(rbf_node_values(gamma, tau, e, empty, lift.sigma));
  out.a_etabar = double_difference(rbf_node_values(gamma, tau, eb, empty, lift.sigma));
  out.a_eta_etabar = double_difference(rbf_node_values(gamma, tau, both, empty, lift.sigma));
  return out;
}

BilateralField bilateral_fields(const Path& gamma, const Path& tau, const Path& eta, const Path& zeta,
                                const Lift& lift, int max_p, int max_q) {
  check_layout(gamma, tau, eta, zeta);
  if (max_p < 0 || max_p > 2 || max_q < 0 || max_q > 2)
    throw std::invalid_argument("bilateral_fields: derivative orders must lie in [0,2]");
  BilateralField out;
  const Eigen::Index rows = gamma.n_nodes() - 1;
  const Eigen::Index cols = tau.n_nodes() - 1;
  for (auto& m : out.a) m = Eigen::MatrixXd::Zero(rows, cols);
  if (lift.kind == Lift::Kind::Identity) {
    const Eigen::MatrixXd dg = increments(gamma);
    const Eigen::MatrixXd dt = increments(tau);
    const Eigen::MatrixXd de = increments(eta);
    const Eigen::MatrixXd dz = increments(zeta);
    out.a[0] = dg * dt.transpose();
    out.nonzero[0] = true;
    if (max_p >= 1) {
      out.a[3] = de * dt.transpose();
      out.nonzero[3] = true;
    }
    if (max_q >= 1) {
      out.a[1] = dg * dz.transpose();
      out.nonzero[1] = true;
    }
    if (max_p >= 1 && max_q >= 1) {
      out.a[4] = de * dz.transpose();
      out.nonzero[4] = true;
    }
    return out;
  }
  for (int p = 0; p <= max_p; ++p) {
    for (int q = 0; q <= max_q; ++q) {
      const Path* left[2] = {&eta, &eta};
      const Path* right[2] = {&zeta, &zeta};
      out.a[3 * p + q] = double_difference(rbf_node_values(
          gamma, tau, std::span<const Path* const>(left, p), std::span<const Path* const>(right, q), lift.sigma));
      out.nonzero[3 * p + q] = true;
    }
  }
  return out;
}

}  // namespace sigppde
