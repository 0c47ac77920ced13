#include "sigppde/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sigppde/errors.hpp"
#include "sigppde/linalg.hpp"

namespace sigppde {

double Payoff::operator()(double y) const {
  switch (kind) {
    case PayoffKind::Zero: return 0.0;
    case PayoffKind::Identity: return y;
    case PayoffKind::Abs: return std::abs(y);
    case PayoffKind::Exp: return std::exp(nu * y);
    case PayoffKind::Call: return std::max(y - strike, 0.0);
  }
  return 0.0;
}

std::string Payoff::name() const {
  switch (kind) {
    case PayoffKind::Zero: return "zero";
    case PayoffKind::Identity: return "identity";
    case PayoffKind::Abs: return "abs";
    case PayoffKind::Exp: return "exp";
    case PayoffKind::Call: return "call";
  }
  return "unknown";
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double analytic_fbm_price(const Payoff& payoff, double theta_T, double t, double T, double hurst) {
  if (t > T) throw std::invalid_argument("analytic_fbm_price: t must not exceed T");
  const double s = T - t > 0.0 ? std::pow(T - t, hurst) : 0.0;
  if (s == 0.0) return payoff(theta_T);
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  switch (payoff.kind) {
    case PayoffKind::Zero: return 0.0;
    case PayoffKind::Identity: return theta_T;
    case PayoffKind::Exp: return std::exp(payoff.nu * theta_T + 0.5 * payoff.nu * payoff.nu * s * s);
    case PayoffKind::Call: {
      const double k = payoff.strike;
      return s * inv_sqrt_2pi * std::exp(-(k - theta_T) * (k - theta_T) / (2.0 * s * s)) -
             (k - theta_T) * normal_cdf((theta_T - k) / s);
    }
    case PayoffKind::Abs: {
      // Mean of the folded normal |N(theta, s^2)|.
      const double z = theta_T / s;
      return s * std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * z * z) + theta_T * (1.0 - 2.0 * normal_cdf(-z));
    }
  }
  return 0.0;
}

std::vector<RbfParams> BandwidthGrid::candidates(int state_dim) const {
  auto sorted = [](std::vector<double> v, const char* name) {
    if (v.empty()) throw std::invalid_argument(std::string("BandwidthGrid: empty ") + name);
    std::sort(v.begin(), v.end(), std::greater<>());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto st = sorted(sigma_t, "sigma_t");
  const auto sl = sorted(sigma_l, "sigma_l");
  const auto sg = sorted(sigma_g, "sigma_g");
  const auto sx = state_dim > 0 ? sorted(sigma_x, "sigma_x") : std::vector<double>{1.0};
  std::vector<RbfParams> out;
  for (double g : sg)
    for (double t : st)
      for (double x : sx)
        for (double l : sl) {
          RbfParams p;
          p.sigma_t = t;
          p.sigma_x.assign(static_cast<std::size_t>(state_dim), x);
          p.sigma_g = g;
          p.sigma_l = l;
          out.push_back(p);
        }
  return out;
}

namespace {

const std::set<std::string> kConfigKeys = {
    "kind",      "payoff",       "hurst",    "horizon",    "n_steps",  "bergomi",  "m",
    "n",         "eval_count",   "mc_paths", "seed",       "delta_steps", "dyadic_order", "lift", "nugget",
    "bandwidths", "cv_grid",     "cv_folds", "x_range",    "emit_plot_data"};

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& keys, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& item : j.items())
    if (!keys.count(item.key())) throw std::invalid_argument(where + ": unknown key '" + item.key() + "'");
}

Payoff payoff_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"type", "nu", "strike"}, "payoff");
  Payoff p;
  const std::string type = j.at("type").get<std::string>();
  if (type == "zero") p.kind = PayoffKind::Zero;
  else if (type == "identity") p.kind = PayoffKind::Identity;
  else if (type == "abs") p.kind = PayoffKind::Abs;
  else if (type == "exp") p.kind = PayoffKind::Exp;
  else if (type == "call") p.kind = PayoffKind::Call;
  else throw std::invalid_argument("payoff: unknown type '" + type + "'");
  p.nu = j.value("nu", 1.0);
  p.strike = j.value("strike", 0.0);
  return p;
}

nlohmann::json payoff_to_json(const Payoff& p) {
  return {{"type", p.name()}, {"nu", p.nu}, {"strike", p.strike}};
}

nlohmann::json params_to_json(const RbfParams& p) {
  return {{"sigma_t", p.sigma_t}, {"sigma_x", p.sigma_x}, {"sigma_g", p.sigma_g}, {"sigma_l", p.sigma_l}};
}

std::vector<double> number_list(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

enum Stream : std::uint64_t { kInterior = 1, kBoundary = 2, kEvaluation = 3, kMonteCarlo = 4, kFolds = 5 };

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  reject_unknown(j, kConfigKeys, "config");
  ExperimentConfig c;
  try {
    if (j.contains("kind")) {
      const auto k = j.at("kind").get<std::string>();
      if (k == "fbm") c.kind = ExperimentKind::Fbm;
      else if (k == "bergomi") c.kind = ExperimentKind::Bergomi;
      else throw std::invalid_argument("config: unknown kind '" + k + "'");
    }
    if (j.contains("payoff")) c.payoff = payoff_from_json(j.at("payoff"));
    c.hurst = j.value("hurst", c.hurst);
    c.horizon = j.value("horizon", c.horizon);
    c.n_steps = j.value("n_steps", c.n_steps);
    if (j.contains("bergomi")) {
      const auto& b = j.at("bergomi");
      reject_unknown(b, {"xi", "vol_of_vol", "rho", "spot_log"}, "bergomi");
      c.bergomi.xi = b.value("xi", c.bergomi.xi);
      c.bergomi.vol_of_vol = b.value("vol_of_vol", c.bergomi.vol_of_vol);
      c.bergomi.rho = b.value("rho", c.bergomi.rho);
      c.bergomi.spot_log = b.value("spot_log", c.bergomi.spot_log);
    }
    c.m = j.value("m", c.m);
    c.n = j.value("n", c.n);
    c.eval_count = j.value("eval_count", c.eval_count);
    c.mc_paths = j.value("mc_paths", c.mc_paths);
    c.seed = j.value("seed", c.seed);
    c.delta_steps = j.value("delta_steps", c.delta_steps);
    c.dyadic_order = j.value("dyadic_order", c.dyadic_order);
    c.nugget = j.value("nugget", c.nugget);
    if (j.contains("lift")) {
      const auto l = j.at("lift").get<std::string>();
      if (l == "identity") c.lift = Lift::Kind::Identity;
      else if (l == "rbf") c.lift = Lift::Kind::Rbf;
      else throw std::invalid_argument("config: unknown lift '" + l + "'");
    }
    if (j.contains("x_range")) {
      const auto r = j.at("x_range").get<std::vector<double>>();
      if (r.size() != 2) throw std::invalid_argument("config: x_range needs two entries");
      c.x_min = r[0];
      c.x_max = r[1];
    }
    if (j.contains("bandwidths")) {
      const auto& b = j.at("bandwidths");
      reject_unknown(b, {"sigma_t", "sigma_x", "sigma_g", "sigma_l"}, "bandwidths");
      RbfParams p = c.default_bandwidths();
      p.sigma_t = b.value("sigma_t", p.sigma_t);
      p.sigma_g = b.value("sigma_g", p.sigma_g);
      p.sigma_l = b.value("sigma_l", p.sigma_l);
      if (b.contains("sigma_x")) p.sigma_x = number_list(b.at("sigma_x"));
      c.bandwidths = p;
    }
    if (j.contains("cv_grid")) {
      const auto& g = j.at("cv_grid");
      reject_unknown(g, {"sigma_t", "sigma_x", "sigma_g", "sigma_l"}, "cv_grid");
      const RbfParams d = c.default_bandwidths();
      BandwidthGrid grid;
      grid.sigma_t = g.contains("sigma_t") ? number_list(g.at("sigma_t")) : std::vector<double>{d.sigma_t};
      grid.sigma_g = g.contains("sigma_g") ? number_list(g.at("sigma_g")) : std::vector<double>{d.sigma_g};
      grid.sigma_l = g.contains("sigma_l") ? number_list(g.at("sigma_l")) : std::vector<double>{d.sigma_l};
      grid.sigma_x = g.contains("sigma_x") ? number_list(g.at("sigma_x"))
                                           : std::vector<double>{d.sigma_x.empty() ? 1.0 : d.sigma_x[0]};
      c.cv_grid = grid;
    }
    c.cv_folds = j.value("cv_folds", c.cv_folds);
    c.emit_plot_data = j.value("emit_plot_data", c.emit_plot_data);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.bergomi.hurst = c.hurst;
  c.validate();
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["kind"] = kind == ExperimentKind::Fbm ? "fbm" : "bergomi";
  j["payoff"] = payoff_to_json(payoff);
  j["hurst"] = hurst;
  j["horizon"] = horizon;
  j["n_steps"] = n_steps;
  j["bergomi"] = {{"xi", bergomi.xi}, {"vol_of_vol", bergomi.vol_of_vol}, {"rho", bergomi.rho},
                  {"spot_log", bergomi.spot_log}};
  j["m"] = m;
  j["n"] = n;
  j["eval_count"] = eval_count;
  j["mc_paths"] = mc_paths;
  j["seed"] = seed;
  j["delta_steps"] = delta_steps;
  j["dyadic_order"] = dyadic_order;
  j["lift"] = lift == Lift::Kind::Identity ? "identity" : "rbf";
  j["nugget"] = nugget;
  if (bandwidths) j["bandwidths"] = params_to_json(*bandwidths);
  if (cv_grid)
    j["cv_grid"] = {{"sigma_t", cv_grid->sigma_t}, {"sigma_x", cv_grid->sigma_x}, {"sigma_g", cv_grid->sigma_g},
                    {"sigma_l", cv_grid->sigma_l}};
  j["cv_folds"] = cv_folds;
  j["x_range"] = {x_min, x_max};
  j["emit_plot_data"] = emit_plot_data;
  return j;
}

void ExperimentConfig::validate() const {
  if (m < 0 || n < 0 || m + n < 1) throw std::invalid_argument("config: need m, n >= 0 and m + n >= 1");
  if (eval_count < 0) throw std::invalid_argument("config: eval_count must be nonnegative");
  if (mc_paths < 1) throw std::invalid_argument("config: mc_paths must be >= 1");
  if (n_steps < 2) throw std::invalid_argument("config: n_steps must be >= 2");
  if (!(horizon > 0.0)) throw std::invalid_argument("config: horizon must be positive");
  if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("config: hurst must lie in (0,1)");
  if (delta_steps < 0.0) throw std::invalid_argument("config: delta_steps must be nonnegative");
  if (dyadic_order < 0 || dyadic_order > 6) throw std::invalid_argument("config: dyadic_order must lie in [0,6]");
  if (!(nugget >= 0.0)) throw std::invalid_argument("config: nugget must be nonnegative");
  if (cv_folds < 2) throw std::invalid_argument("config: cv_folds must be >= 2");
  if (kind == ExperimentKind::Bergomi) {
    bergomi.validate();
    if (!(x_min < x_max)) throw std::invalid_argument("config: x_range must be increasing");
  }
  const int dim = kind == ExperimentKind::Bergomi ? 1 : 0;
  if (bandwidths) bandwidths->validate(dim);
  if (cv_grid) {
    for (const auto& p : cv_grid->candidates(dim)) p.validate(dim);
  }
}

RbfParams ExperimentConfig::default_bandwidths() const {
  RbfParams p;
  p.sigma_t = 0.3 * horizon;
  if (kind == ExperimentKind::Bergomi) p.sigma_x = {0.5 * (x_max - x_min)};
  p.sigma_g = 32.0;
  p.sigma_l = 1.0;
  return p;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["mse"] = mse;
  j["mae"] = mae;
  j["count"] = points.size();
  j["bandwidths"] = params_to_json(bandwidths);
  j["jitter_used"] = jitter_used;
  j["config"] = config;
  return j;
}

std::string MetricsReport::points_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "id,t,x,predicted,oracle,oracle_se,abs_error\n";
  for (const auto& p : points)
    os << p.id << ',' << p.t << ',' << p.x << ',' << p.predicted << ',' << p.oracle << ',' << p.oracle_se << ','
       << p.abs_error << '\n';
  return os.str();
}

void MetricsReport::summarize(MetricsReport& r) {
  double se = 0.0, ae = 0.0;
  for (auto& p : r.points) {
    p.abs_error = std::abs(p.predicted - p.oracle);
    se += p.abs_error * p.abs_error;
    ae += p.abs_error;
  }
  const double n = r.points.empty() ? 1.0 : static_cast<double>(r.points.size());
  r.mse = se / n;
  r.mae = ae / n;
}

PpdeSpec make_spec(const ExperimentConfig& cfg) {
  PpdeSpec spec;
  spec.kind = cfg.kind == ExperimentKind::Fbm ? PpdeKind::FbmHeat : PpdeKind::RoughBergomi;
  spec.fbm = cfg.fbm();
  spec.bergomi = cfg.bergomi;
  spec.bergomi.hurst = cfg.hurst;
  spec.delta = cfg.delta_steps * cfg.grid().step();
  const Payoff payoff = cfg.payoff;
  if (cfg.kind == ExperimentKind::Fbm) {
    spec.terminal = [payoff](const CollocationPoint& p) { return payoff(p.gamma(p.gamma.n_nodes() - 1, 0)); };
  } else {
    spec.terminal = [payoff](const CollocationPoint& p) { return payoff(std::exp(p.x(0))); };
  }
  return spec;
}

namespace {

ThetaOptions experiment_theta() { return ThetaOptions{KernelWeights::VarianceMatched, PreTimeFill::Zero}; }

CollocationPoint draw_point(const ExperimentConfig& cfg, const PpdeSpec& spec, std::mt19937_64& rng,
                            bool terminal) {
  const TimeGrid grid = cfg.grid();
  std::uniform_int_distribution<int> node(1, grid.n_steps() - 1);
  std::uniform_real_distribution<double> xs(cfg.x_min, cfg.x_max);
  const double t = terminal ? grid.t1() : grid.node(node(rng));
  Eigen::VectorXd x;
  if (cfg.kind == ExperimentKind::Bergomi) {
    x.resize(1);
    x(0) = xs(rng);
  }
  const auto inc = brownian_increments(grid, rng);
  Path gamma = simulate_theta(t, spec.fbm, grid, inc, experiment_theta());
  return spec.make_point(t, std::move(x), std::move(gamma));
}

}  // namespace

ExperimentData sample_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData d;
  d.spec = make_spec(cfg);
  auto r_in = make_rng(cfg.seed, kInterior);
  auto r_bd = make_rng(cfg.seed, kBoundary);
  auto r_ev = make_rng(cfg.seed, kEvaluation);
  for (int i = 0; i < cfg.m; ++i) d.interior.push_back(draw_point(cfg, d.spec, r_in, false));
  for (int i = 0; i < cfg.n; ++i) d.boundary.push_back(draw_point(cfg, d.spec, r_bd, true));
  for (int i = 0; i < cfg.eval_count; ++i) d.evaluation.push_back(draw_point(cfg, d.spec, r_ev, false));
  return d;
}

namespace {

Eigen::VectorXd data_vector(const Problem& pr, const PpdeSpec& spec) {
  Eigen::VectorXd b(static_cast<Eigen::Index>(pr.size()));
  for (std::size_t i = 0; i < pr.size(); ++i)
    b(static_cast<Eigen::Index>(i)) = i < pr.m ? spec.source_at(pr.points[i]) : spec.terminal_at(pr.points[i]);
  return b;
}

KernelConfig kernel_config(const ExperimentConfig& cfg, const RbfParams& params) {
  KernelConfig kc;
  kc.params = params;
  kc.lift = cfg.lift == Lift::Kind::Rbf ? Lift::rbf(params.sigma_g) : Lift::identity();
  kc.dyadic_order = cfg.dyadic_order;
  kc.nugget = cfg.nugget;
  return kc;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

// Solves for each candidate sigma_g group and returns the best bandwidths.
RbfParams select_bandwidths(const ExperimentConfig& cfg, const ExperimentData& data, const Eigen::VectorXd* b) {
  const int dim = cfg.kind == ExperimentKind::Bergomi ? 1 : 0;
  auto cands = cfg.cv_grid->candidates(dim);
  if (cands.size() == 1) return cands.front();
  if (cfg.lift == Lift::Kind::Identity) {
    for (auto& c : cands) c.sigma_g = cands.front().sigma_g;
    cands.erase(std::unique(cands.begin(), cands.end(),
                            [](const RbfParams& a, const RbfParams& c) {
                              return a.sigma_t == c.sigma_t && a.sigma_x == c.sigma_x && a.sigma_l == c.sigma_l;
                            }),
                cands.end());
  }
  std::vector<std::pair<RbfParams, double>> all;
  std::size_t start = 0;
  while (start < cands.size()) {
    std::size_t end = start;
    while (end < cands.size() && cands[end].sigma_g == cands[start].sigma_g) ++end;
    auto problem = make_problem(data.spec, data.interior, data.boundary, kernel_config(cfg, cands[start]));
    GramSystem base = assemble(problem);
    if (b) base.b = *b;
    const std::vector<RbfParams> group(cands.begin() + static_cast<long>(start), cands.begin() + static_cast<long>(end));
    const auto res = cross_validate(base, group, cfg.cv_folds, cfg.seed);
    all.insert(all.end(), res.scores.begin(), res.scores.end());
    start = end;
  }
  const auto* best = &all.front();
  for (const auto& s : all)
    if (s.second < best->second * (1.0 - 1e-9)) best = &s;
  return best->first;
}

}  // namespace

CrossValidationResult cross_validate(const GramSystem& base, const std::vector<RbfParams>& candidates, int folds,
                                     std::uint64_t seed) {
  if (candidates.empty()) throw std::invalid_argument("cross_validate: empty bandwidth grid");
  CrossValidationResult out;
  if (candidates.size() == 1) {
    out.best = candidates.front();
    out.scores.emplace_back(candidates.front(), 0.0);
    return out;
  }
  const auto N = static_cast<Eigen::Index>(base.size());
  const int k = std::max(2, std::min<int>(folds, static_cast<int>(N)));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;
  auto rng = make_rng(seed, kFolds);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold_of(static_cast<std::size_t>(N));
  for (std::size_t i = 0; i < order.size(); ++i) fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % k);

  for (const auto& cand : candidates) {
    const GramSystem sys = reassemble(base, cand);
    double se = 0.0;
    bool ok = true;
    for (int f = 0; f < k && ok; ++f) {
      std::vector<Eigen::Index> tr, te;
      for (Eigen::Index i = 0; i < N; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
      if (tr.empty()) continue;
      const Eigen::MatrixXd Gtt = sys.G(tr, tr);
      try {
        const auto chol = linalg::jittered_cholesky(Gtt);
        const Eigen::VectorXd bt = base.b(tr);
        const Eigen::VectorXd w = chol.llt.solve(bt);
        const Eigen::VectorXd pred = sys.G(te, tr) * w;
        se += (pred - base.b(te)).squaredNorm();
      } catch (const NumericalError&) {
        ok = false;
      }
    }
    out.scores.emplace_back(cand, ok ? se / static_cast<double>(N) : std::numeric_limits<double>::infinity());
  }
  const auto* best = &out.scores.front();
  for (const auto& s : out.scores)
    if (s.second < best->second * (1.0 - 1e-9)) best = &s;
  out.best = best->first;
  return out;
}

RbfParams cross_validate(const ExperimentConfig& cfg, const BandwidthGrid& grid) {
  ExperimentConfig c = cfg;
  c.cv_grid = grid;
  const auto data = sample_experiment(c);
  return select_bandwidths(c, data, nullptr);
}

std::vector<MetricsReport> run_fbm_payoffs(const ExperimentConfig& cfg, const std::vector<Payoff>& payoffs) {
  if (cfg.kind != ExperimentKind::Fbm) throw std::invalid_argument("run_fbm: config kind must be fbm");
  const auto start = std::chrono::steady_clock::now();
  const auto data = sample_experiment(cfg);
  const RbfParams initial = cfg.bandwidths ? *cfg.bandwidths : cfg.default_bandwidths();
  auto problem = make_problem(data.spec, data.interior, data.boundary, kernel_config(cfg, initial));
  const GramSystem base = assemble(problem);
  const EvaluationTable table(problem, data.evaluation);
  const double setup_ms = elapsed_ms(start);

  std::vector<MetricsReport> reports;
  for (const auto& payoff : payoffs) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig pc = cfg;
    pc.payoff = payoff;
    const PpdeSpec spec = make_spec(pc);
    const Eigen::VectorXd b = data_vector(*problem, spec);
    RbfParams params = initial;
    if (cfg.cv_grid) {
      GramSystem with_b = base;
      with_b.b = b;
      if (cfg.lift == Lift::Kind::Identity) {
        params = cross_validate(with_b, cfg.cv_grid->candidates(0), cfg.cv_folds, cfg.seed).best;
      } else {
        params = select_bandwidths(pc, data, &b);
      }
    }
    GramSystem sys = (params.sigma_g == initial.sigma_g || cfg.lift == Lift::Kind::Identity)
                         ? reassemble(base, params)
                         : assemble(make_problem(data.spec, data.interior, data.boundary, kernel_config(cfg, params)));
    const Eigen::VectorXd w = sys.factor.solve(b);
    const Eigen::MatrixXd F = sys.table == base.table ? table.features(params, Basis::Constraint)
                                                      : EvaluationTable(sys.problem, data.evaluation)
                                                            .features(params, Basis::Constraint);
    const Eigen::VectorXd pred = F * w;
    MetricsReport r;
    r.config = pc.to_json();
    r.bandwidths = params;
    r.jitter_used = sys.jitter_used;
    const double T = cfg.horizon;
    for (std::size_t e = 0; e < data.evaluation.size(); ++e) {
      const auto& p = data.evaluation[e];
      PointRecord rec;
      rec.id = static_cast<int>(e);
      rec.t = p.t;
      rec.predicted = pred(static_cast<Eigen::Index>(e));
      rec.oracle = analytic_fbm_price(payoff, p.gamma(p.gamma.n_nodes() - 1, 0), p.t, T, cfg.hurst);
      r.points.push_back(rec);
    }
    MetricsReport::summarize(r);
    r.runtime_ms = setup_ms + elapsed_ms(t0);
    reports.push_back(std::move(r));
  }
  return reports;
}

MetricsReport run_fbm(const ExperimentConfig& cfg) { return run_fbm_payoffs(cfg, {cfg.payoff}).front(); }

McPrice mc_bergomi_price(double t, double x, const Path& gamma, const BergomiParams& params, const Payoff& payoff,
                         int mc_paths, const TimeGrid& grid, std::uint64_t seed) {
  params.validate();
  if (mc_paths < 1) throw std::invalid_argument("mc_bergomi_price: mc_paths must be >= 1");
  if (!(gamma.grid() == grid)) throw std::invalid_argument("mc_bergomi_price: path grid mismatch");
  const int j = grid.index_of(t);
  const int len = grid.n_steps() - j;
  const double h = grid.step();
  if (len == 0) return {payoff(std::exp(x)), 0.0};

  const FbmSpec fbm = FbmSpec::normalized(params.hurst, grid.t1());
  const auto w = convolution_weights(fbm, h, len, KernelWeights::VarianceMatched);
  const double rho_bar = std::sqrt(1.0 - params.rho * params.rho);
  const double sqrt_h = std::sqrt(h);
  std::vector<double> comp(static_cast<std::size_t>(len)), gam(static_cast<std::size_t>(len));
  for (int k = 0; k < len; ++k) {
    const double s = grid.node(j + k);
    comp[static_cast<std::size_t>(k)] = 0.5 * params.vol_of_vol * params.vol_of_vol * std::pow(s, 2.0 * params.hurst);
    gam[static_cast<std::size_t>(k)] = gamma(j + k, 0);
  }

  const int pairs = std::max(1, (mc_paths + 1) / 2);
  constexpr int kBlock = 256;
  const int blocks = (pairs + kBlock - 1) / kBlock;
  std::vector<double> sum(static_cast<std::size_t>(blocks)), sum2(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(dynamic, 1)
  for (int blk = 0; blk < blocks; ++blk) {
    auto rng = make_rng(seed, kMonteCarlo, static_cast<std::uint64_t>(blk));
    std::normal_distribution<double> normal;
    std::vector<double> z1(static_cast<std::size_t>(len)), z2(static_cast<std::size_t>(len));
    double s1 = 0.0, s2 = 0.0;
    const int count = std::min(kBlock, pairs - blk * kBlock);
    for (int p = 0; p < count; ++p) {
      for (int k = 0; k < len; ++k) {
        z1[static_cast<std::size_t>(k)] = normal(rng) * sqrt_h;
        z2[static_cast<std::size_t>(k)] = normal(rng) * sqrt_h;
      }
      double pair_value = 0.0;
      for (int sign = 1; sign >= -1; sign -= 2) {
        double X = x;
        for (int k = 0; k < len; ++k) {
          // Forward Volterra integral I^t at node j + k from the increments already drawn.
          double I = 0.0;
          for (int q = 0; q < k; ++q) I += w[static_cast<std::size_t>(k - 1 - q)] * z1[static_cast<std::size_t>(q)];
          I *= sign;
          const double psi = params.xi * std::exp(params.vol_of_vol * (gam[static_cast<std::size_t>(k)] + I) -
                                                  comp[static_cast<std::size_t>(k)]);
          const double dB = sign * (params.rho * z1[static_cast<std::size_t>(k)] + rho_bar * z2[static_cast<std::size_t>(k)]);
          X += std::sqrt(psi) * dB - 0.5 * psi * h;
        }
        pair_value += 0.5 * payoff(std::exp(X));
      }
      s1 += pair_value;
      s2 += pair_value * pair_value;
    }
    sum[static_cast<std::size_t>(blk)] = s1;
    sum2[static_cast<std::size_t>(blk)] = s2;
  }
  double s1 = 0.0, s2 = 0.0;
  for (int blk = 0; blk < blocks; ++blk) {
    s1 += sum[static_cast<std::size_t>(blk)];
    s2 += sum2[static_cast<std::size_t>(blk)];
  }
  const double mean = s1 / pairs;
  const double var = pairs > 1 ? std::max(0.0, (s2 - pairs * mean * mean) / (pairs - 1)) : 0.0;
  return {mean, std::sqrt(var / pairs)};
}

MetricsReport run_bergomi(const ExperimentConfig& cfg) {
  if (cfg.kind != ExperimentKind::Bergomi) throw std::invalid_argument("run_bergomi: config kind must be bergomi");
  const auto start = std::chrono::steady_clock::now();
  const auto data = sample_experiment(cfg);
  RbfParams params = cfg.bandwidths ? *cfg.bandwidths : cfg.default_bandwidths();
  if (cfg.cv_grid) params = select_bandwidths(cfg, data, nullptr);
  auto problem = make_problem(data.spec, data.interior, data.boundary, kernel_config(cfg, params));
  const GramSystem sys = assemble(problem);
  const RecoveryModel model = solve_linear(sys);
  const EvaluationTable table(problem, data.evaluation);
  const Eigen::VectorXd pred = table.features(params, Basis::Constraint) * model.weights();

  MetricsReport r;
  r.config = cfg.to_json();
  r.bandwidths = params;
  r.jitter_used = sys.jitter_used;
  r.points.resize(data.evaluation.size());
  const TimeGrid grid = cfg.grid();
  BergomiParams bp = cfg.bergomi;
  bp.hurst = cfg.hurst;
  const auto count = static_cast<long>(data.evaluation.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long e = 0; e < count; ++e) {
    const auto& p = data.evaluation[static_cast<std::size_t>(e)];
    const auto mc = mc_bergomi_price(p.t, p.x(0), p.gamma, bp, cfg.payoff, cfg.mc_paths, grid,
                                     cfg.seed * 1000003ULL + static_cast<std::uint64_t>(e));
    PointRecord rec;
    rec.id = static_cast<int>(e);
    rec.t = p.t;
    rec.x = p.x(0);
    rec.predicted = pred(e);
    rec.oracle = mc.price;
    rec.oracle_se = mc.std_error;
    r.points[static_cast<std::size_t>(e)] = rec;
  }
  MetricsReport::summarize(r);
  r.runtime_ms = elapsed_ms(start);
  return r;
}

}  // namespace sigppde
