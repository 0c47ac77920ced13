#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sigppde/errors.hpp"
#include "sigppde/experiments.hpp"
#include "sigppde/io.hpp"
#include "sigppde/oracle_suite.hpp"
#include "sigppde/parallel.hpp"

namespace fs = std::filesystem;
using namespace sigppde;

namespace {

constexpr int kInvalidConfig = 2;
constexpr int kNumericalFailure = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir = "out";
  bool emit_plot_data = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_config) {
  if (with_config) cmd->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--threads", c.threads, "OpenMP threads (falls back to SIGPPDE_THREADS)");
  cmd->add_option("--out-dir", c.out_dir, "output directory");
  cmd->add_flag("--emit-plot-data", c.emit_plot_data, "write scatter series for plotting");
}

ExperimentConfig load_config(const Common& c, ExperimentKind kind) {
  nlohmann::json j = nlohmann::json::object();
  if (!c.config.empty()) {
    try {
      j = nlohmann::json::parse(io::read_text(c.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument(std::string("config: ") + e.what());
    }
  }
  if (!j.contains("kind")) j["kind"] = kind == ExperimentKind::Fbm ? "fbm" : "bergomi";
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  if (cfg.kind != kind) throw std::invalid_argument("config: kind does not match the subcommand");
  if (c.seed) cfg.seed = *c.seed;
  if (c.emit_plot_data) cfg.emit_plot_data = true;
  return cfg;
}

void write_report(const fs::path& dir, const std::string& stem, const MetricsReport& r, bool plot, int threads) {
  io::write_text(dir / (stem + ".json"), r.to_json().dump(2) + "\n");
  io::write_text(dir / (stem + "_points.csv"), r.points_csv());
  io::write_text(dir / (stem + "_run_info.json"),
                 nlohmann::json{{"runtime_ms", r.runtime_ms}, {"threads", threads}}.dump(2) + "\n");
  if (plot) {
    std::string csv = "oracle,predicted\n";
    char buf[96];
    for (const auto& p : r.points) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.oracle, p.predicted);
      csv += buf;
    }
    io::write_text(dir / (stem + "_scatter.csv"), csv);
  }
  std::printf("%s: mse=%.6g mae=%.6g points=%zu runtime_ms=%.1f\n", stem.c_str(), r.mse, r.mae, r.points.size(),
              r.runtime_ms);
}

int run_kernel_eval(const Common& c, const std::string& gamma_file, const std::string& tau_file,
                    const std::string& eta_file, const std::string& etabar_file, int order, const std::string& lift,
                    double sigma) {
  const int threads = configure_threads(c.threads);
  (void)threads;
  const Path gamma = io::load_path(gamma_file);
  const Path tau = io::load_path(tau_file);
  const Path eta = eta_file.empty() ? Path::zeros(gamma.grid(), gamma.channels()) : io::load_path(eta_file);
  const Path etabar = etabar_file.empty() ? eta : io::load_path(etabar_file);
  if (gamma.channels() != tau.channels() || eta.channels() != gamma.channels() ||
      etabar.channels() != gamma.channels())
    throw std::invalid_argument("kernel-eval: channel counts differ");
  if (lift != "identity" && lift != "rbf") throw std::invalid_argument("kernel-eval: unknown lift " + lift);
  const Lift l = lift == "rbf" ? Lift::rbf(sigma) : Lift::identity();
  const auto f = a_fields(gamma, tau, eta, etabar, l);
  GoursatOptions opt;
  opt.dyadic_order = order;
  opt.full_surfaces = c.emit_plot_data;
  const auto sol = solve(f, opt);
  const nlohmann::json out{{"kernel", sol.corner[0]},
                           {"d_eta", sol.corner[1]},
                           {"d_etabar", sol.corner[2]},
                           {"d_eta_etabar", sol.corner[3]},
                           {"dyadic_order", order},
                           {"lift", lift}};
  io::write_text(fs::path(c.out_dir) / "kernel.json", out.dump(2) + "\n");
  if (c.emit_plot_data) io::write_text(fs::path(c.out_dir) / "surfaces.csv", io::surfaces_csv(sol));
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_solve_fbm(const Common& c, bool all_payoffs) {
  const ExperimentConfig cfg = load_config(c, ExperimentKind::Fbm);
  const int threads = configure_threads(c.threads);
  std::vector<Payoff> payoffs{cfg.payoff};
  if (all_payoffs) {
    payoffs = {Payoff{PayoffKind::Identity, 1.0, 0.0}, Payoff{PayoffKind::Abs, 1.0, 0.0},
               Payoff{PayoffKind::Exp, cfg.payoff.kind == PayoffKind::Exp ? cfg.payoff.nu : 1.0, 0.0},
               Payoff{PayoffKind::Call, 1.0, cfg.payoff.kind == PayoffKind::Call ? cfg.payoff.strike : 0.0}};
  }
  const auto reports = run_fbm_payoffs(cfg, payoffs);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const std::string stem = all_payoffs ? "metrics_" + payoffs[i].name() : "metrics";
    write_report(c.out_dir, stem, reports[i], cfg.emit_plot_data, threads);
  }
  return 0;
}

int run_solve_bergomi(const Common& c) {
  const ExperimentConfig cfg = load_config(c, ExperimentKind::Bergomi);
  const int threads = configure_threads(c.threads);
  write_report(c.out_dir, "metrics", run_bergomi(cfg), cfg.emit_plot_data, threads);
  return 0;
}

int run_cross_validate(const Common& c, const std::string& kind) {
  if (kind != "fbm" && kind != "bergomi") throw std::invalid_argument("cross-validate: unknown kind " + kind);
  const ExperimentConfig cfg = load_config(c, kind == "fbm" ? ExperimentKind::Fbm : ExperimentKind::Bergomi);
  configure_threads(c.threads);
  if (!cfg.cv_grid) throw std::invalid_argument("cross-validate: config has no cv_grid");
  const RbfParams best = cross_validate(cfg, *cfg.cv_grid);
  const nlohmann::json out{{"sigma_t", best.sigma_t},
                           {"sigma_x", best.sigma_x},
                           {"sigma_g", best.sigma_g},
                           {"sigma_l", best.sigma_l}};
  io::write_text(fs::path(c.out_dir) / "cv.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_oracle_check(const Common& c, int instances) {
  configure_threads(c.threads);
  oracle::SuiteOptions o;
  o.instances = instances;
  if (c.seed) o.seed = *c.seed;
  const auto r = oracle::run_suite(o);
  const bool ok = r.max_kernel_err <= 1e-3 && r.max_first_err <= 1e-3 && r.max_second_err <= 1e-2 &&
                  r.sig_bound_violations == 0 && r.kernel_bound_violations == 0;
  const nlohmann::json out{{"instances", r.instances},
                           {"max_kernel_err", r.max_kernel_err},
                           {"max_first_err", r.max_first_err},
                           {"max_second_err", r.max_second_err},
                           {"sig_bound_violations", r.sig_bound_violations},
                           {"kernel_bound_violations", r.kernel_bound_violations},
                           {"pass", ok}};
  io::write_text(fs::path(c.out_dir) / "oracle_check.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return ok ? 0 : kNumericalFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signature-kernel solvers for path-dependent PDEs"};
  app.require_subcommand(1);

  Common kc, fc, bc, cc, oc;
  auto* kernel = app.add_subcommand("kernel-eval", "signature kernel and directional derivatives of two paths");
  std::string gamma_file, tau_file, eta_file, etabar_file, lift = "identity";
  int order = 2;
  double sigma = 1.0;
  kernel->add_option("--gamma", gamma_file, "first path (.csv or .json)")->required()->check(CLI::ExistingFile);
  kernel->add_option("--tau", tau_file, "second path")->required()->check(CLI::ExistingFile);
  kernel->add_option("--eta", eta_file, "direction on the first path")->check(CLI::ExistingFile);
  kernel->add_option("--etabar", etabar_file, "second direction (defaults to --eta)")->check(CLI::ExistingFile);
  kernel->add_option("--dyadic-order", order, "grid refinement")->check(CLI::Range(0, 12));
  kernel->add_option("--lift", lift, "identity or rbf");
  kernel->add_option("--sigma", sigma, "RBF lift bandwidth")->check(CLI::PositiveNumber);
  add_common(kernel, kc, false);

  auto* fbm = app.add_subcommand("solve-fbm", "fBM heat equation against analytic prices");
  bool all_payoffs = false;
  fbm->add_flag("--all-payoffs", all_payoffs, "run identity, abs, exp and call on one assembly");
  add_common(fbm, fc, true);

  auto* berg = app.add_subcommand("solve-bergomi", "rough Bergomi pricing against Monte Carlo");
  add_common(berg, bc, true);

  auto* cv = app.add_subcommand("cross-validate", "select bandwidths by k-fold cross-validation");
  std::string cv_kind = "fbm";
  cv->add_option("--kind", cv_kind, "fbm or bergomi");
  add_common(cv, cc, true);

  auto* oracle_cmd = app.add_subcommand("oracle-check", "Goursat solver against truncated signatures");
  int instances = 50;
  oracle_cmd->add_option("--instances", instances, "random instances")->check(CLI::PositiveNumber);
  add_common(oracle_cmd, oc, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInvalidConfig;
  }

  try {
    if (*kernel) return run_kernel_eval(kc, gamma_file, tau_file, eta_file, etabar_file, order, lift, sigma);
    if (*fbm) return run_solve_fbm(fc, all_payoffs);
    if (*berg) return run_solve_bergomi(bc);
    if (*cv) return run_cross_validate(cc, cv_kind);
    if (*oracle_cmd) return run_oracle_check(oc, instances);
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
