#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sigppde {

// Uniform grid t0 < t0 + h < ... < t1 with n_steps cells.
class TimeGrid {
public:
  TimeGrid(double t0, double t1, int n_steps);

  double t0() const noexcept { return t0_; }
  double t1() const noexcept { return t1_; }
  int n_steps() const noexcept { return n_steps_; }
  int n_nodes() const noexcept { return n_steps_ + 1; }
  double step() const noexcept { return (t1_ - t0_) / n_steps_; }
  double node(int k) const noexcept { return t0_ + k * step(); }

  // Index of the node equal to t (within 1e-9 of a step); throws otherwise.
  int index_of(double t) const;
  bool is_node(double t) const noexcept;

  bool operator==(const TimeGrid& other) const noexcept {
    return t0_ == other.t0_ && t1_ == other.t1_ && n_steps_ == other.n_steps_;
  }

private:
  double t0_;
  double t1_;
  int n_steps_;
};

// Piecewise-linear path sampled at the nodes of a TimeGrid.
// values has one row per node and one column per channel.
class Path {
public:
  Path(TimeGrid grid, Eigen::MatrixXd values);

  // Zero path with the given channel count.
  static Path zeros(const TimeGrid& grid, int channels);

  const TimeGrid& grid() const noexcept { return grid_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  int channels() const noexcept { return static_cast<int>(values_.cols()); }
  int n_nodes() const noexcept { return static_cast<int>(values_.rows()); }
  double operator()(int k, int c) const { return values_(k, c); }

  Eigen::RowVectorXd increment(int cell) const { return values_.row(cell + 1) - values_.row(cell); }

  // Same grid, values shifted so that the first node is the origin.
  Path recentered() const;
  Path scaled(double alpha) const;
  Path plus(const Path& other, double alpha = 1.0) const;

private:
  TimeGrid grid_;
  Eigen::MatrixXd values_;
};

// Riemann-Liouville kernel K(s, r) = scale * (s - r)^(H - 1/2).
struct FbmSpec {
  double hurst;
  double scale;
  double horizon;

  FbmSpec(double hurst, double scale, double horizon);
  // Normalisation scale = sqrt(2H), giving Var(W_hat_t) = t^(2H).
  static FbmSpec normalized(double hurst, double horizon);

  double kernel(double lag) const;
};

struct BergomiParams {
  double xi = 0.055;
  double vol_of_vol = 1.9;
  double rho = -0.9;
  double hurst = 0.1;
  double spot_log = 0.0;

  void validate() const;
  // Instantaneous variance psi_t(y) = xi * exp(vol_of_vol * y - vol_of_vol^2 t^(2H) / 2).
  double variance(double t, double y) const;
};

enum class DirectionMode { GridOffset, Shift };

// K^{delta,t}(s) as a one-channel path, zero for s <= t.
// In Shift mode the kernel is evaluated at (s + epsilon - t).
Path make_kernel_direction(double t, double delta, const FbmSpec& spec, const TimeGrid& grid,
                           DirectionMode mode = DirectionMode::GridOffset, double epsilon = 0.0);

// How a kernel is integrated against a Brownian increment over one cell.
enum class KernelWeights {
  LeftPoint,        // K(s, r_k)
  Midpoint,         // K(s, r_k + h/2)
  VarianceMatched,  // sqrt of the cell average of K(s, r)^2
};

// Values of Theta^t before t: zero, or held at the value the sum takes at s = t.
enum class PreTimeFill { Zero, Hold };

struct ThetaOptions {
  KernelWeights weights = KernelWeights::LeftPoint;
  PreTimeFill fill = PreTimeFill::Zero;
};

// Theta^t_s = sum_{r_k < t} K(s, r_k) dW_k on nodes s > t.
// With zero fill the terminal node always holds Theta^t_T, including t = T.
Path simulate_theta(double t, const FbmSpec& spec, const TimeGrid& grid,
                    std::span<const double> increments, ThetaOptions options = {});

enum class VolterraMode { Convolution, ExactCovariance };

struct VolterraOptions {
  VolterraMode mode = VolterraMode::Convolution;
  KernelWeights weights = KernelWeights::VarianceMatched;
};

// W_hat_s = int_0^s K(s, r) dW_r on the grid.
Path simulate_volterra(const FbmSpec& spec, const TimeGrid& grid, std::span<const double> increments,
                       VolterraOptions options = {});

// I^t_s = int_t^s K(s, r) dW_r, zero for s <= t.
Path simulate_forward_volterra(double t, const FbmSpec& spec, const TimeGrid& grid,
                               std::span<const double> increments, VolterraOptions options = {});

// Convolution weights w_L for lags [L h, (L+1) h], L = 0..n-1.
std::vector<double> convolution_weights(const FbmSpec& spec, double step, int n, KernelWeights weights);

// Cov(W_hat_s, W_hat_u) on nodes 1..n_steps of a grid starting at 0.
Eigen::MatrixXd volterra_covariance(const FbmSpec& spec, double step, int n);

double sup_norm(const Path& p);
double one_variation(const Path& p);

// Prepends channel 0 holding (s - t0) / (t1 - t0).
Path time_augment(const Path& p);

// Independent N(0, h) increments, one per cell.
std::vector<double> brownian_increments(const TimeGrid& grid, std::mt19937_64& rng);

}  // namespace sigppde
