#include "sigppde/paths.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "sigppde/errors.hpp"
#include "sigppde/linalg.hpp"

namespace sigppde {

TimeGrid::TimeGrid(double t0, double t1, int n_steps) : t0_(t0), t1_(t1), n_steps_(n_steps) {
  if (!(t0 < t1)) throw std::invalid_argument("TimeGrid: require t0 < t1");
  if (n_steps < 1) throw std::invalid_argument("TimeGrid: require n_steps >= 1");
}

bool TimeGrid::is_node(double t) const noexcept {
  const double x = (t - t0_) / step();
  const double k = std::round(x);
  return k >= 0 && k <= n_steps_ && std::abs(x - k) <= 1e-9;
}

int TimeGrid::index_of(double t) const {
  if (!is_node(t)) throw std::invalid_argument("TimeGrid: " + std::to_string(t) + " is not a grid node");
  return static_cast<int>(std::round((t - t0_) / step()));
}

Path::Path(TimeGrid grid, Eigen::MatrixXd values) : grid_(grid), values_(std::move(values)) {
  if (values_.rows() != grid_.n_nodes())
    throw std::invalid_argument("Path: row count must equal the number of grid nodes");
  if (values_.cols() < 1) throw std::invalid_argument("Path: at least one channel required");
  if (!values_.allFinite()) throw std::invalid_argument("Path: non-finite values");
}

Path Path::zeros(const TimeGrid& grid, int channels) {
  return Path(grid, Eigen::MatrixXd::Zero(grid.n_nodes(), channels));
}

Path Path::recentered() const {
  Eigen::MatrixXd v = values_.rowwise() - values_.row(0);
  return Path(grid_, std::move(v));
}

Path Path::scaled(double alpha) const { return Path(grid_, alpha * values_); }

Path Path::plus(const Path& other, double alpha) const {
  if (!(grid_ == other.grid_) || channels() != other.channels())
    throw std::invalid_argument("Path::plus: layout mismatch");
  return Path(grid_, values_ + alpha * other.values_);
}

FbmSpec::FbmSpec(double h, double s, double t) : hurst(h), scale(s), horizon(t) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("FbmSpec: hurst must lie in (0,1)");
  if (!(scale > 0.0)) throw std::invalid_argument("FbmSpec: scale must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("FbmSpec: horizon must be positive");
}

FbmSpec FbmSpec::normalized(double hurst, double horizon) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("FbmSpec: hurst must lie in (0,1)");
  return FbmSpec(hurst, std::sqrt(2.0 * hurst), horizon);
}

double FbmSpec::kernel(double lag) const { return scale * std::pow(lag, hurst - 0.5); }

void BergomiParams::validate() const {
  if (!(xi > 0.0)) throw std::invalid_argument("BergomiParams: xi must be positive");
  if (!(vol_of_vol >= 0.0)) throw std::invalid_argument("BergomiParams: vol_of_vol must be nonnegative");
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("BergomiParams: |rho| must be < 1");
  if (!(hurst > 0.0 && hurst <= 0.5)) throw std::invalid_argument("BergomiParams: hurst must lie in (0,1/2]");
}

double BergomiParams::variance(double t, double y) const {
  return xi * std::exp(vol_of_vol * y - 0.5 * vol_of_vol * vol_of_vol * std::pow(t, 2.0 * hurst));
}

Path make_kernel_direction(double t, double delta, const FbmSpec& spec, const TimeGrid& grid,
                           DirectionMode mode, double epsilon) {
  if (t < grid.t0() || t >= grid.t1()) throw std::invalid_argument("make_kernel_direction: t outside grid");
  if (delta < 0.0) throw std::invalid_argument("make_kernel_direction: delta must be nonnegative");
  if (mode == DirectionMode::Shift && !(epsilon > 0.0))
    throw std::invalid_argument("make_kernel_direction: shift mode needs epsilon > 0");
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(grid.n_nodes(), 1);
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const double s = grid.node(k);
    if (s <= t) continue;
    const double clamped = delta > 0.0 ? std::min(s, t + delta) : s;
    const double lag = clamped - t + (mode == DirectionMode::Shift ? epsilon : 0.0);
    v(k, 0) = spec.kernel(lag);
  }
  return Path(grid, std::move(v));
}

namespace {

void check_increments(const TimeGrid& grid, std::span<const double> increments, const char* who) {
  if (static_cast<int>(increments.size()) != grid.n_steps())
    throw std::invalid_argument(std::string(who) + ": increment count must equal the number of cells");
}

// Kernel weight for cell [r_k, r_k + h] seen from s, with lag index L = (s - r_k)/h - 1.
double cell_weight(const FbmSpec& spec, double h, int lag_index, KernelWeights weights) {
  switch (weights) {
    case KernelWeights::LeftPoint:
      return spec.kernel((lag_index + 1) * h);
    case KernelWeights::Midpoint:
      return spec.kernel((lag_index + 0.5) * h);
    case KernelWeights::VarianceMatched: {
      const double two_h = 2.0 * spec.hurst;
      const double a = std::pow(static_cast<double>(lag_index + 1), two_h);
      const double b = lag_index == 0 ? 0.0 : std::pow(static_cast<double>(lag_index), two_h);
      return spec.scale * std::sqrt((a - b) * std::pow(h, two_h - 1.0) / two_h);
    }
  }
  return 0.0;
}

}  // namespace

std::vector<double> convolution_weights(const FbmSpec& spec, double step, int n, KernelWeights weights) {
  std::vector<double> w(static_cast<std::size_t>(std::max(n, 0)));
  for (int l = 0; l < n; ++l) w[l] = cell_weight(spec, step, l, weights);
  return w;
}

Path simulate_theta(double t, const FbmSpec& spec, const TimeGrid& grid, std::span<const double> increments,
                    ThetaOptions options) {
  check_increments(grid, increments, "simulate_theta");
  const int j = grid.index_of(t);
  const double h = grid.step();
  const auto w = convolution_weights(spec, h, grid.n_steps(), options.weights);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(grid.n_nodes(), 1);
  auto sum_at = [&](int i) {
    double acc = 0.0;
    for (int k = 0; k < j; ++k) acc += w[i - 1 - k] * increments[k];
    return acc;
  };
  for (int i = j + 1; i < grid.n_nodes(); ++i) v(i, 0) = sum_at(i);
  // At t = T the terminal node carries the limit of Theta^t_T as t -> T.
  if (j == grid.n_steps() && options.fill == PreTimeFill::Zero) v(j, 0) = sum_at(j);
  if (options.fill == PreTimeFill::Hold && j > 0) {
    const double held = sum_at(j);
    for (int i = 0; i <= j; ++i) v(i, 0) = held;
  }
  return Path(grid, std::move(v));
}

Eigen::MatrixXd volterra_covariance(const FbmSpec& spec, double step, int n) {
  const double hp = spec.hurst + 0.5;
  const double c2 = spec.scale * spec.scale;
  Eigen::MatrixXd cov(n, n);
  boost::math::quadrature::tanh_sinh<double> integrator;
  for (int i = 0; i < n; ++i) {
    const double s = (i + 1) * step;
    cov(i, i) = c2 * std::pow(s, 2.0 * spec.hurst) / (2.0 * spec.hurst);
    for (int l = i + 1; l < n; ++l) {
      const double gap = (l - i) * step;
      // x = s - r = v^(1/(H+1/2)) removes the endpoint singularity of (s - r)^(H - 1/2).
      auto f = [&](double v) { return std::pow(gap + std::pow(v, 1.0 / hp), spec.hurst - 0.5); };
      const double value = c2 / hp * integrator.integrate(f, 0.0, std::pow(s, hp));
      cov(i, l) = value;
      cov(l, i) = value;
    }
  }
  return cov;
}

namespace {

// Samples the volterra integral on nodes j..n from cells j..n-1.
void fill_volterra(const FbmSpec& spec, const TimeGrid& grid, std::span<const double> increments, int j,
                   const VolterraOptions& options, Eigen::MatrixXd& v) {
  const double h = grid.step();
  const int len = grid.n_steps() - j;
  if (len <= 0) return;
  if (spec.hurst == 0.5 && spec.scale == 1.0) {
    double acc = 0.0;
    for (int k = 0; k < len; ++k) {
      acc += increments[j + k];
      v(j + k + 1, 0) = acc;
    }
    return;
  }
  if (options.mode == VolterraMode::Convolution) {
    if (options.weights == KernelWeights::LeftPoint)
      throw std::invalid_argument("simulate_volterra: left-point weights hit the kernel singularity");
    const auto w = convolution_weights(spec, h, len, options.weights);
    for (int i = 1; i <= len; ++i) {
      double acc = 0.0;
      for (int k = 0; k < i; ++k) acc += w[i - 1 - k] * increments[j + k];
      v(j + i, 0) = acc;
    }
    return;
  }
  const auto chol = linalg::jittered_cholesky(volterra_covariance(spec, h, len));
  Eigen::VectorXd z(len);
  const double inv_sqrt_h = 1.0 / std::sqrt(h);
  for (int k = 0; k < len; ++k) z(k) = increments[j + k] * inv_sqrt_h;
  const Eigen::VectorXd sample = chol.llt.matrixL() * z;
  for (int i = 0; i < len; ++i) v(j + i + 1, 0) = sample(i);
}

}  // namespace

Path simulate_volterra(const FbmSpec& spec, const TimeGrid& grid, std::span<const double> increments,
                       VolterraOptions options) {
  check_increments(grid, increments, "simulate_volterra");
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(grid.n_nodes(), 1);
  fill_volterra(spec, grid, increments, 0, options, v);
  return Path(grid, std::move(v));
}

Path simulate_forward_volterra(double t, const FbmSpec& spec, const TimeGrid& grid,
                               std::span<const double> increments, VolterraOptions options) {
  check_increments(grid, increments, "simulate_forward_volterra");
  const int j = grid.index_of(t);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(grid.n_nodes(), 1);
  fill_volterra(spec, grid, increments, j, options, v);
  return Path(grid, std::move(v));
}

double sup_norm(const Path& p) { return p.values().rowwise().norm().maxCoeff(); }

double one_variation(const Path& p) {
  double acc = 0.0;
  for (int k = 0; k + 1 < p.n_nodes(); ++k) acc += p.increment(k).norm();
  return acc;
}

Path time_augment(const Path& p) {
  const TimeGrid& g = p.grid();
  Eigen::MatrixXd v(p.n_nodes(), p.channels() + 1);
  for (int k = 0; k < p.n_nodes(); ++k) v(k, 0) = static_cast<double>(k) / g.n_steps();
  v.rightCols(p.channels()) = p.values();
  return Path(g, std::move(v));
}

std::vector<double> brownian_increments(const TimeGrid& grid, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(grid.step()));
  std::vector<double> out(static_cast<std::size_t>(grid.n_steps()));
  for (auto& x : out) x = normal(rng);
  return out;
}

}  // namespace sigppde
