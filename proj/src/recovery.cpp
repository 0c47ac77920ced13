#include "sigppde/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sigppde/errors.hpp"
#include "sigppde/linalg.hpp"

namespace sigppde {

namespace {

bool on_horizon(double t, double horizon) { return std::abs(t - horizon) <= 1e-12 * std::max(1.0, horizon); }

std::size_t upper_index(std::size_t i, std::size_t j, std::size_t n) {
  // Row-major packed upper triangle including the diagonal.
  return i * n - i * (i + 1) / 2 + j;
}

SigDerivatives transposed(const SigDerivatives& s) {
  SigDerivatives out;
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) out.k[3 * q + p] = s.k[3 * p + q];
  return out;
}

}  // namespace

std::shared_ptr<const Problem> make_problem(const PpdeSpec& spec, std::vector<CollocationPoint> interior,
                                            std::vector<CollocationPoint> boundary, const KernelConfig& kernel) {
  if (interior.empty() && boundary.empty()) throw std::invalid_argument("assemble: need at least one point");
  auto pr = std::make_shared<Problem>();
  pr->spec = spec;
  pr->kernel = kernel;
  pr->m = interior.size();
  const double horizon = spec.horizon();
  for (auto& p : interior) {
    if (!(p.t < horizon) || on_horizon(p.t, horizon))
      throw std::invalid_argument("assemble: interior points need t < T");
    pr->points.push_back(std::move(p));
  }
  for (auto& p : boundary) {
    if (!on_horizon(p.t, horizon)) throw std::invalid_argument("assemble: boundary points need t = T");
    pr->points.push_back(std::move(p));
  }
  const int dim = static_cast<int>(pr->points.front().x.size());
  kernel.params.validate(dim);
  for (const auto& p : pr->points) {
    if (p.x.size() != dim) throw std::invalid_argument("assemble: inconsistent state dimensions");
    pr->prepared.push_back(prepare(p));
  }
  for (std::size_t i = 0; i < pr->points.size(); ++i)
    pr->constraint.push_back(i < pr->m ? operator_terms(spec, pr->points[i]) : point_evaluation());
  return pr;
}

SignatureTable::SignatureTable(const Problem& problem) : n_(problem.size()) {
  upper_.resize(n_ * (n_ + 1) / 2);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(upper_.size());
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i; j < n_; ++j) pairs.emplace_back(i, j);
  const auto count = static_cast<long>(pairs.size());
  bool failed = false;
  std::string message;
#pragma omp parallel for schedule(dynamic, 4)
  for (long k = 0; k < count; ++k) {
    const auto [i, j] = pairs[static_cast<std::size_t>(k)];
    try {
      upper_[upper_index(i, j, n_)] =
          signature_derivatives(problem.prepared[i], problem.prepared[j], problem.interior(i) ? 2 : 0,
                                problem.interior(j) ? 2 : 0, problem.kernel);
    } catch (const std::exception& e) {
#pragma omp critical(sigtable_error)
      {
        if (!failed) message = "pair (" + std::to_string(i) + "," + std::to_string(j) + "): " + e.what();
        failed = true;
      }
    }
  }
  if (failed) throw NumericalError("signature table: " + message);
}

SigDerivatives SignatureTable::get(std::size_t i, std::size_t j) const {
  if (i <= j) return upper_[upper_index(i, j, n_)];
  return transposed(upper_[upper_index(j, i, n_)]);
}

namespace {

void build_matrices(GramSystem& sys) {
  const Problem& pr = *sys.problem;
  const std::size_t N = pr.size();
  const std::size_t m = pr.m;
  const Functional eval = point_evaluation();
  sys.G.resize(N, N);
  sys.K.resize(N, N);
  sys.K_tilde.resize(N, N);
  sys.ext.resize(N + m, N + m);
  const auto total = static_cast<long>(N * N);
#pragma omp parallel for schedule(static)
  for (long idx = 0; idx < total; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / N;
    const std::size_t j = static_cast<std::size_t>(idx) % N;
    const SigDerivatives sig = sys.table->get(i, j);
    const auto& pi = pr.prepared[i];
    const auto& pj = pr.prepared[j];
    sys.K_tilde(i, j) = combine(pr.constraint[i], eval, pi, pj, sig, sys.params);
    if (j < i) continue;
    const double g = combine(pr.constraint[i], pr.constraint[j], pi, pj, sig, sys.params);
    const double k = combine(eval, eval, pi, pj, sig, sys.params);
    sys.G(i, j) = sys.G(j, i) = g;
    sys.K(i, j) = sys.K(j, i) = k;
  }
  // Extended Gram: plain sections at all points, then operator sections at interior points.
  sys.ext.topLeftCorner(N, N) = sys.K;
  if (m > 0) {
    sys.ext.block(N, 0, m, N) = sys.K_tilde.topRows(m);
    sys.ext.block(0, N, N, m) = sys.K_tilde.topRows(m).transpose();
    sys.ext.bottomRightCorner(m, m) = sys.G.topLeftCorner(m, m);
  }
  sys.b.resize(N);
  for (std::size_t i = 0; i < N; ++i)
    sys.b(i) = i < m ? pr.spec.source_at(pr.points[i]) : pr.spec.terminal_at(pr.points[i]);
}

std::string closest_pair(const Eigen::MatrixXd& g) {
  const Eigen::Index n = g.rows();
  double best = std::numeric_limits<double>::infinity();
  Eigen::Index bi = 0, bj = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (g.row(i) - g.row(j)).norm();
      if (d < best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  return "(" + std::to_string(bi) + "," + std::to_string(bj) + ")";
}

void factorize(GramSystem& sys) {
  const double nugget = sys.problem->kernel.nugget;
  if (nugget > 0.0) sys.G.diagonal().array() += nugget * sys.G.trace();
  try {
    auto chol = linalg::jittered_cholesky(sys.G);
    sys.factor = std::move(chol.llt);
    sys.jitter_used = chol.jitter;
  } catch (const NumericalError&) {
    throw NumericalError("assemble: Gram matrix is singular beyond jitter; nearly identical rows " +
                         closest_pair(sys.G));
  }
}

}  // namespace

GramSystem assemble(std::shared_ptr<const Problem> problem) {
  GramSystem sys;
  sys.problem = std::move(problem);
  sys.params = sys.problem->kernel.params;
  sys.table = std::make_shared<SignatureTable>(*sys.problem);
  build_matrices(sys);
  factorize(sys);
  return sys;
}

GramSystem assemble(const PpdeSpec& spec, std::vector<CollocationPoint> interior,
                    std::vector<CollocationPoint> boundary, const KernelConfig& kernel) {
  return assemble(make_problem(spec, std::move(interior), std::move(boundary), kernel));
}

GramSystem reassemble(const GramSystem& base, const RbfParams& params) {
  if (base.problem->kernel.lift.kind == Lift::Kind::Rbf && params.sigma_g != base.params.sigma_g)
    throw std::invalid_argument("reassemble: sigma_g changes the signature table");
  params.validate(static_cast<int>(base.problem->points.front().x.size()));
  GramSystem sys;
  sys.problem = base.problem;
  sys.table = base.table;
  sys.params = params;
  build_matrices(sys);
  factorize(sys);
  return sys;
}

RecoveryModel::RecoveryModel(std::shared_ptr<const Problem> problem, RbfParams params, Basis basis,
                             Eigen::VectorXd weights, std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor)
    : problem_(std::move(problem)),
      params_(std::move(params)),
      basis_(basis),
      weights_(std::move(weights)),
      factor_(std::move(factor)) {
  if (!weights_.allFinite()) throw NumericalError("RecoveryModel: non-finite weights");
  if (static_cast<std::size_t>(weights_.size()) != basis_size())
    throw std::invalid_argument("RecoveryModel: weight count does not match the basis");
}

RecoveryModel RecoveryModel::prior(const PpdeSpec& spec, const KernelConfig& kernel) {
  auto pr = std::make_shared<Problem>();
  pr->spec = spec;
  pr->kernel = kernel;
  return RecoveryModel(pr, kernel.params, Basis::Constraint, Eigen::VectorXd(), nullptr);
}

std::size_t RecoveryModel::basis_size() const noexcept {
  if (!problem_) return 0;
  return basis_ == Basis::Constraint ? problem_->size() : problem_->size() + problem_->m;
}

std::vector<std::pair<std::size_t, const Functional*>> RecoveryModel::basis_entries() const {
  std::vector<std::pair<std::size_t, const Functional*>> out;
  const Problem& pr = *problem_;
  if (basis_ == Basis::Constraint) {
    for (std::size_t i = 0; i < pr.size(); ++i) out.emplace_back(i, &pr.constraint[i]);
  } else {
    for (std::size_t i = 0; i < pr.size(); ++i) out.emplace_back(i, &eval_);
    for (std::size_t i = 0; i < pr.m; ++i) out.emplace_back(i, &pr.constraint[i]);
  }
  return out;
}

Eigen::VectorXd RecoveryModel::features(const CollocationPoint& omega) const {
  const Problem& pr = *problem_;
  Eigen::VectorXd out(static_cast<Eigen::Index>(basis_size()));
  if (out.size() == 0) return out;
  const PreparedPoint po = prepare(omega);
  std::vector<SigDerivatives> sig(pr.size());
  for (std::size_t i = 0; i < pr.size(); ++i)
    sig[i] = signature_derivatives(pr.prepared[i], po, pr.interior(i) ? 2 : 0, 0, pr.kernel);
  const auto entries = basis_entries();
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto [i, f] = entries[e];
    out(static_cast<Eigen::Index>(e)) = combine(*f, eval_, pr.prepared[i], po, sig[i], params_);
  }
  return out;
}

double RecoveryModel::predict(const CollocationPoint& omega) const {
  if (basis_size() == 0) return 0.0;
  return features(omega).dot(weights_);
}

Eigen::VectorXd RecoveryModel::predict(const std::vector<CollocationPoint>& omegas) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(omegas.size()));
  const auto count = static_cast<long>(omegas.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long k = 0; k < count; ++k) out(k) = predict(omegas[static_cast<std::size_t>(k)]);
  return out;
}

Eigen::VectorXd RecoveryModel::constraint_values() const {
  const Problem& pr = *problem_;
  const SignatureTable table(pr);
  const auto entries = basis_entries();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pr.size()));
  for (std::size_t i = 0; i < pr.size(); ++i)
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const auto [j, f] = entries[e];
      out(i) += weights_(e) *
                combine(pr.constraint[i], *f, pr.prepared[i], pr.prepared[j], table.get(i, j), params_);
    }
  return out;
}

EvaluationTable::EvaluationTable(std::shared_ptr<const Problem> problem, const std::vector<CollocationPoint>& points)
    : problem_(std::move(problem)) {
  const Problem& pr = *problem_;
  for (const auto& p : points) prepared_.push_back(prepare(p));
  const std::size_t N = pr.size();
  sig_.resize(prepared_.size() * N);
  const auto total = static_cast<long>(sig_.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long k = 0; k < total; ++k) {
    const std::size_t e = static_cast<std::size_t>(k) / N;
    const std::size_t i = static_cast<std::size_t>(k) % N;
    sig_[static_cast<std::size_t>(k)] =
        signature_derivatives(pr.prepared[i], prepared_[e], pr.interior(i) ? 2 : 0, 0, pr.kernel);
  }
}

Eigen::MatrixXd EvaluationTable::features(const RbfParams& params, Basis basis) const {
  const Problem& pr = *problem_;
  const std::size_t N = pr.size();
  const std::size_t B = basis == Basis::Constraint ? N : N + pr.m;
  const Functional eval = point_evaluation();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(prepared_.size()), static_cast<Eigen::Index>(B));
  for (std::size_t e = 0; e < prepared_.size(); ++e) {
    for (std::size_t c = 0; c < B; ++c) {
      const std::size_t i = c < N ? c : c - N;
      const Functional& f = basis == Basis::Constraint ? pr.constraint[i] : (c < N ? eval : pr.constraint[i]);
      out(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(c)) =
          combine(f, eval, pr.prepared[i], prepared_[e], sig_[e * N + i], params);
    }
  }
  return out;
}

RecoveryModel solve_linear(const GramSystem& sys, SolveMethod method) {
  const auto N = static_cast<Eigen::Index>(sys.size());
  if (method == SolveMethod::Symmetric) {
    Eigen::VectorXd w = sys.factor.solve(sys.b);
    if (!w.allFinite()) throw NumericalError("solve_linear: non-finite weights");
    return RecoveryModel(sys.problem, sys.params, Basis::Constraint, std::move(w),
                         std::make_shared<const Eigen::LLT<Eigen::MatrixXd>>(sys.factor));
  }
  const auto m = static_cast<Eigen::Index>(sys.m());
  const Eigen::Index E = N + m;
  // Constraint functionals applied to the extended basis.
  Eigen::MatrixXd C(N, E);
  C.leftCols(N) = sys.K_tilde;
  if (m > 0) C.rightCols(m) = sys.G.leftCols(m);
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(E + N, E + N);
  kkt.topLeftCorner(E, E) = sys.ext;
  kkt.block(0, E, E, N) = C.transpose();
  kkt.block(E, 0, N, E) = C;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(E + N);
  rhs.tail(N) = sys.b;
  Eigen::VectorXd sol = kkt.partialPivLu().solve(rhs);
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if (!sol.allFinite() || (kkt * sol - rhs).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    // Rank-deficient constraints (duplicate points): least-squares minimal solution.
    sol = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(kkt).solve(rhs);
  }
  if (!sol.allFinite()) throw NumericalError("solve_linear: KKT system is singular");
  return RecoveryModel(sys.problem, sys.params, Basis::Extended, sol.head(E), nullptr);
}

GpPosterior gp_posterior(const RecoveryModel& model, const std::vector<CollocationPoint>& test_points) {
  const auto T = static_cast<Eigen::Index>(test_points.size());
  const Problem& pr = model.problem();
  GpPosterior out;
  Eigen::MatrixXd prior(T, T);
  std::vector<PreparedPoint> prep;
  for (const auto& p : test_points) prep.push_back(prepare(p));
  const Functional eval = point_evaluation();
  for (Eigen::Index i = 0; i < T; ++i)
    for (Eigen::Index j = i; j < T; ++j) {
      const auto sig = signature_derivatives(prep[i], prep[j], 0, 0, pr.kernel);
      prior(i, j) = prior(j, i) = combine(eval, eval, prep[i], prep[j], sig, model.params());
    }
  if (model.basis_size() == 0) {
    out.mean = Eigen::VectorXd::Zero(T);
    out.cov = prior;
    return out;
  }
  if (model.basis() != Basis::Constraint || model.factor() == nullptr)
    throw std::invalid_argument("gp_posterior: requires a model from the symmetric route");
  Eigen::MatrixXd A(T, static_cast<Eigen::Index>(model.basis_size()));
  for (Eigen::Index i = 0; i < T; ++i) A.row(i) = model.features(test_points[i]).transpose();
  out.mean = A * model.weights();
  Eigen::MatrixXd cov = prior - A * model.factor()->solve(A.transpose());
  cov = 0.5 * (cov + cov.transpose());
  if (T > 0 && linalg::min_eigenvalue(cov) < 0.0) {
    const auto chol = linalg::jittered_cholesky(cov, prior.trace());
    cov.diagonal().array() += chol.jitter;
    out.jitter_used = chol.jitter;
  }
  out.cov = cov;
  return out;
}

namespace {

Eigen::VectorXd latent_vector(const GramSystem& sys, const Nonlinearity& psi, const Eigen::VectorXd& z) {
  const auto N = static_cast<Eigen::Index>(sys.size());
  const auto m = static_cast<Eigen::Index>(sys.m());
  Eigen::VectorXd v(N + m);
  v.head(m) = z;
  v.segment(m, N - m) = sys.b.tail(N - m);
  for (Eigen::Index i = 0; i < m; ++i) v(N + i) = sys.b(i) - (psi.value ? psi.value(z(i)) : 0.0);
  return v;
}

double psi_derivative(const Nonlinearity& psi, double z) {
  if (!psi.value) return 0.0;
  if (psi.derivative) return psi.derivative(z);
  const double h = 1e-6 * std::max(1.0, std::abs(z));
  return (psi.value(z + h) - psi.value(z - h)) / (2.0 * h);
}

double objective_with(const GramSystem& sys, const Eigen::LLT<Eigen::MatrixXd>& ext, const Nonlinearity& psi,
                      const Eigen::VectorXd& z, Eigen::VectorXd* grad, Eigen::VectorXd* solved) {
  const Eigen::VectorXd v = latent_vector(sys, psi, z);
  const Eigen::VectorXd s = ext.solve(v);
  if (solved) *solved = s;
  if (grad) {
    const auto N = static_cast<Eigen::Index>(sys.size());
    const auto m = static_cast<Eigen::Index>(sys.m());
    grad->resize(m);
    for (Eigen::Index i = 0; i < m; ++i) (*grad)(i) = 2.0 * (s(i) - psi_derivative(psi, z(i)) * s(N + i));
  }
  return v.dot(s);
}

Eigen::LLT<Eigen::MatrixXd> extended_factor(const GramSystem& sys) {
  return linalg::jittered_cholesky(sys.ext).llt;
}

}  // namespace

double nonlinear_objective(const GramSystem& sys, const Nonlinearity& psi, const Eigen::VectorXd& z,
                           Eigen::VectorXd* gradient) {
  if (z.size() != static_cast<Eigen::Index>(sys.m())) throw std::invalid_argument("nonlinear_objective: size");
  return objective_with(sys, extended_factor(sys), psi, z, gradient, nullptr);
}

NonlinearResult solve_nonlinear(const GramSystem& sys, const Nonlinearity& psi, const DescentOptions& options) {
  const auto N = static_cast<Eigen::Index>(sys.size());
  const auto m = static_cast<Eigen::Index>(sys.m());
  const auto ext = extended_factor(sys);
  const double start = N > m ? sys.b.tail(N - m).mean() : 0.0;
  Eigen::VectorXd z = Eigen::VectorXd::Constant(m, start);
  Eigen::VectorXd grad;
  double J = objective_with(sys, ext, psi, z, &grad, nullptr);
  std::vector<double> history{J};
  int it = 0;
  auto converged = [&](double j, const Eigen::VectorXd& g) {
    return g.norm() <= options.grad_tol * (1.0 + std::abs(j));
  };
  while (m > 0 && !converged(J, grad)) {
    if (it >= options.max_iters) {
      throw ConvergenceError("solve_nonlinear: no convergence after " + std::to_string(it) + " iterations",
                             std::vector<double>(z.data(), z.data() + z.size()));
    }
    Eigen::VectorXd d;
    if (options.direction == DescentDirection::GaussNewton) {
      // Jacobian of the latent vector with respect to z.
      Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(N + m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        jac(i, i) = 1.0;
        jac(N + i, i) = -psi_derivative(psi, z(i));
      }
      const Eigen::MatrixXd H = 2.0 * jac.transpose() * ext.solve(jac);
      d = -Eigen::LDLT<Eigen::MatrixXd>(H).solve(grad);
      if (!d.allFinite() || d.dot(grad) >= 0.0) d = -grad;
    } else {
      d = -grad;
    }
    const double slope = d.dot(grad);
    double step = options.initial_step;
    bool accepted = false;
    Eigen::VectorXd z_new, g_new;
    double J_new = J;
    for (int k = 0; k < 60; ++k) {
      z_new = z + step * d;
      J_new = objective_with(sys, ext, psi, z_new, &g_new, nullptr);
      if (std::isfinite(J_new) && J_new <= J + options.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++it;
    if (!accepted) {
      // No decrease is representable any more; the iterate is stationary to working precision.
      if (std::abs(slope) <= 1e-14 * (1.0 + std::abs(J))) break;
      throw ConvergenceError("solve_nonlinear: line search failed", std::vector<double>(z.data(), z.data() + z.size()));
    }
    z = z_new;
    grad = g_new;
    J = J_new;
    history.push_back(J);
  }
  Eigen::VectorXd weights;
  objective_with(sys, ext, psi, z, nullptr, &weights);
  NonlinearResult res{RecoveryModel(sys.problem, sys.params, Basis::Extended, weights, nullptr), z, J,
                      grad.size() ? grad.norm() : 0.0, it, std::move(history)};
  return res;
}

}  // namespace sigppde
