#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sigppde/recovery.hpp"

namespace sigppde {

enum class PayoffKind { Zero, Identity, Abs, Exp, Call };

struct Payoff {
  PayoffKind kind = PayoffKind::Identity;
  double nu = 1.0;
  double strike = 0.0;

  double operator()(double y) const;
  std::string name() const;
};

double normal_cdf(double z);

// E[f(W_hat_T) | F_t] for W_hat_T ~ N(theta_T, (T - t)^(2H)).
double analytic_fbm_price(const Payoff& payoff, double theta_T, double t, double T, double hurst);

struct BandwidthGrid {
  std::vector<double> sigma_t;
  std::vector<double> sigma_x;  // applied to every state coordinate
  std::vector<double> sigma_l;
  std::vector<double> sigma_g;

  // All combinations, ordered from the largest bandwidths to the smallest.
  std::vector<RbfParams> candidates(int state_dim) const;
};

enum class ExperimentKind { Fbm, Bergomi };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Fbm;
  Payoff payoff;
  double hurst = 0.1;
  double horizon = 1.0;
  int n_steps = 64;
  BergomiParams bergomi;
  int m = 150;
  int n = 50;
  int eval_count = 100;
  int mc_paths = 20000;
  std::uint64_t seed = 7;
  double delta_steps = 8.0;
  int dyadic_order = 1;
  Lift::Kind lift = Lift::Kind::Rbf;
  double nugget = 1e-8;  // relative to trace(G)
  std::optional<RbfParams> bandwidths;
  std::optional<BandwidthGrid> cv_grid;
  int cv_folds = 5;
  double x_min = -0.5;
  double x_max = 0.5;
  bool emit_plot_data = false;

  // Throws std::invalid_argument on unknown keys or invalid values.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;

  TimeGrid grid() const { return TimeGrid(0.0, horizon, n_steps); }
  FbmSpec fbm() const { return FbmSpec::normalized(hurst, horizon); }
  RbfParams default_bandwidths() const;
};

struct PointRecord {
  int id = 0;
  double t = 0.0;
  double x = 0.0;
  double predicted = 0.0;
  double oracle = 0.0;
  double oracle_se = 0.0;
  double abs_error = 0.0;
};

struct MetricsReport {
  double mse = 0.0;
  double mae = 0.0;
  std::vector<PointRecord> points;
  double runtime_ms = 0.0;
  RbfParams bandwidths;
  double jitter_used = 0.0;
  nlohmann::json config;

  // Summary without the runtime, which is not reproducible.
  nlohmann::json to_json() const;
  std::string points_csv() const;
  static void summarize(MetricsReport& r);
};

// Collocation and evaluation data drawn from the configured seed.
struct ExperimentData {
  PpdeSpec spec;
  std::vector<CollocationPoint> interior;
  std::vector<CollocationPoint> boundary;
  std::vector<CollocationPoint> evaluation;
};

ExperimentData sample_experiment(const ExperimentConfig& cfg);
PpdeSpec make_spec(const ExperimentConfig& cfg);

MetricsReport run_fbm(const ExperimentConfig& cfg);
// One Gram assembly shared by several payoffs.
std::vector<MetricsReport> run_fbm_payoffs(const ExperimentConfig& cfg, const std::vector<Payoff>& payoffs);

struct McPrice {
  double price = 0.0;
  double std_error = 0.0;
};

// Antithetic Euler scheme for the rough Bergomi log-price started at (t, x, gamma).
// The payoff is applied to exp(X_T).
McPrice mc_bergomi_price(double t, double x, const Path& gamma, const BergomiParams& params, const Payoff& payoff,
                         int mc_paths, const TimeGrid& grid, std::uint64_t seed);

MetricsReport run_bergomi(const ExperimentConfig& cfg);

struct CrossValidationResult {
  RbfParams best;
  std::vector<std::pair<RbfParams, double>> scores;  // held-out constraint MSE per candidate
};

// k-fold cross-validation on the constraints of an assembled system.
CrossValidationResult cross_validate(const GramSystem& base, const std::vector<RbfParams>& candidates, int folds,
                                     std::uint64_t seed);
RbfParams cross_validate(const ExperimentConfig& cfg, const BandwidthGrid& grid);

}  // namespace sigppde
