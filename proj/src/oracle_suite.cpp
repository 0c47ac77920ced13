#include "sigppde/oracle_suite.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "sigppde/goursat.hpp"
#include "sigppde/sig_oracle.hpp"
#include "sigppde/static_kernels.hpp"

namespace sigppde::oracle {

Path random_piecewise_linear(int channels, int segments, double max_variation, std::mt19937_64& rng) {
  if (channels < 1 || segments < 1 || !(max_variation > 0.0))
    throw std::invalid_argument("random_piecewise_linear: invalid shape");
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> var(0.25 * max_variation, max_variation);
  Eigen::MatrixXd inc(segments, channels);
  for (int k = 0; k < segments; ++k)
    for (int c = 0; c < channels; ++c) inc(k, c) = normal(rng);
  double total = 0.0;
  for (int k = 0; k < segments; ++k) total += inc.row(k).norm();
  inc *= var(rng) / total;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(segments + 1, channels);
  for (int c = 0; c < channels; ++c) v(0, c) = normal(rng);
  for (int k = 0; k < segments; ++k) v.row(k + 1) = v.row(k) + inc.row(k);
  return Path(TimeGrid(0.0, 1.0, segments), std::move(v));
}

SuiteReport run_suite(const SuiteOptions& o) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(o.seed);
  SuiteReport r;
  r.instances = o.instances;
  for (int n = 0; n < o.instances; ++n) {
    const Path g = random_piecewise_linear(o.channels, o.segments, o.max_variation, rng);
    const Path t = random_piecewise_linear(o.channels, o.segments, o.max_variation, rng);
    const Path eta = random_piecewise_linear(o.channels, o.segments, o.max_variation, rng);
    const Path etabar = random_piecewise_linear(o.channels, o.segments, o.max_variation, rng);

    const auto f = a_fields(g, t, eta, etabar, Lift::identity());
    const auto sol = solve(g, t, eta, etabar, f, o.dyadic_order);

    const double k = truncated_kernel(g, t, o.level);
    const double d1 = fd_directional_derivative(g, t, eta, o.level, o.fd_eps1);
    const double d2 = fd_second(g, t, eta, etabar, o.level, o.fd_eps2);
    r.max_kernel_err = std::max(r.max_kernel_err, std::abs(sol.corner[0] - k) / (1.0 + std::abs(k)));
    r.max_first_err = std::max(r.max_first_err, std::abs(sol.corner[1] - d1));
    r.max_second_err = std::max(r.max_second_err, std::abs(sol.corner[3] - d2));

    const double vg = one_variation(g), vt = one_variation(t);
    if (path_signature(g, o.level).norm() > std::exp(vg)) ++r.sig_bound_violations;
    if (std::abs(sol.corner[0]) > std::exp(vg * vt)) ++r.kernel_bound_violations;
  }
  r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace sigppde::oracle
