#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sigppde/operator.hpp"

namespace sigppde {

// Collocation data shared by a Gram system and the models trained on it.
struct Problem {
  PpdeSpec spec;
  KernelConfig kernel;
  std::vector<CollocationPoint> points;  // interior points first, then boundary points
  std::size_t m = 0;                     // interior count
  std::vector<PreparedPoint> prepared;
  std::vector<Functional> constraint;  // L at interior points, evaluation at boundary points

  std::size_t size() const noexcept { return points.size(); }
  std::size_t n() const noexcept { return points.size() - m; }
  bool interior(std::size_t i) const noexcept { return i < m; }
};

std::shared_ptr<const Problem> make_problem(const PpdeSpec& spec, std::vector<CollocationPoint> interior,
                                            std::vector<CollocationPoint> boundary, const KernelConfig& kernel);

// Signature-kernel derivatives for every unordered pair of collocation points.
// Depends on the lift and dyadic order only, so it can be reused across time/state/start bandwidths.
class SignatureTable {
public:
  explicit SignatureTable(const Problem& problem);

  // Derivatives with p taken at point i and q at point j.
  SigDerivatives get(std::size_t i, std::size_t j) const;
  std::size_t size() const noexcept { return n_; }

private:
  std::size_t n_;
  std::vector<SigDerivatives> upper_;
};

struct GramSystem {
  std::shared_ptr<const Problem> problem;
  std::shared_ptr<const SignatureTable> table;
  RbfParams params;

  Eigen::MatrixXd G;        // constraint functionals applied on both sides
  Eigen::MatrixXd K;        // plain kernel on all points
  Eigen::MatrixXd K_tilde;  // constraint functionals applied to plain sections
  Eigen::MatrixXd ext;      // Gram of [plain sections at all points; operator sections at interior points]
  Eigen::VectorXd b;
  Eigen::LLT<Eigen::MatrixXd> factor;  // jittered Cholesky of G
  double jitter_used = 0.0;

  std::size_t m() const noexcept { return problem->m; }
  std::size_t size() const noexcept { return problem->size(); }
};

// Throws std::invalid_argument when m + n == 0 or a point is on the wrong side of the horizon.
GramSystem assemble(const PpdeSpec& spec, std::vector<CollocationPoint> interior,
                    std::vector<CollocationPoint> boundary, const KernelConfig& kernel);
GramSystem assemble(std::shared_ptr<const Problem> problem);
// Rebuilds the matrices for new bandwidths, reusing the signature table (sigma_g must be unchanged).
GramSystem reassemble(const GramSystem& base, const RbfParams& params);

enum class SolveMethod { Symmetric, Kkt };

// Which collocation functionals the weights multiply.
enum class Basis {
  Constraint,  // L_i at interior points, evaluation at boundary points
  Extended,    // evaluation at all points, then L_i at interior points
};

class RecoveryModel {
public:
  RecoveryModel(std::shared_ptr<const Problem> problem, RbfParams params, Basis basis, Eigen::VectorXd weights,
                std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor);

  // Model with no collocation data (the prior).
  static RecoveryModel prior(const PpdeSpec& spec, const KernelConfig& kernel);

  double predict(const CollocationPoint& omega) const;
  Eigen::VectorXd predict(const std::vector<CollocationPoint>& omegas) const;

  // Basis functionals applied to kappa(., omega).
  Eigen::VectorXd features(const CollocationPoint& omega) const;
  // Constraint functional i applied to the model.
  Eigen::VectorXd constraint_values() const;

  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  Basis basis() const noexcept { return basis_; }
  const Problem& problem() const noexcept { return *problem_; }
  std::shared_ptr<const Problem> problem_ptr() const noexcept { return problem_; }
  const RbfParams& params() const noexcept { return params_; }
  const Eigen::LLT<Eigen::MatrixXd>* factor() const noexcept { return factor_.get(); }
  std::size_t basis_size() const noexcept;

private:
  // Pairs (point index, functional) in basis order.
  std::vector<std::pair<std::size_t, const Functional*>> basis_entries() const;

  std::shared_ptr<const Problem> problem_;
  RbfParams params_;
  Basis basis_;
  Eigen::VectorXd weights_;
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor_;
  Functional eval_ = point_evaluation();
};

// Signature derivatives between every collocation point and a fixed set of evaluation points,
// reusable across time/state/start bandwidths.
class EvaluationTable {
public:
  EvaluationTable(std::shared_ptr<const Problem> problem, const std::vector<CollocationPoint>& points);

  // Row e holds the basis functionals applied to kappa(., point e).
  Eigen::MatrixXd features(const RbfParams& params, Basis basis) const;
  std::size_t size() const noexcept { return prepared_.size(); }

private:
  std::shared_ptr<const Problem> problem_;
  std::vector<PreparedPoint> prepared_;
  std::vector<SigDerivatives> sig_;  // evaluation-major
};

RecoveryModel solve_linear(const GramSystem& sys, SolveMethod method = SolveMethod::Symmetric);

struct GpPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double jitter_used = 0.0;
};

// Requires a model on the constraint basis (symmetric route) or the prior.
GpPosterior gp_posterior(const RecoveryModel& model, const std::vector<CollocationPoint>& test_points);

// Pointwise nonlinearity psi_nl entering L u = source - psi_nl(u).
struct Nonlinearity {
  std::function<double(double)> value;
  std::function<double(double)> derivative;  // optional; central differences when empty
};

enum class DescentDirection { GaussNewton, Gradient };

struct DescentOptions {
  DescentDirection direction = DescentDirection::GaussNewton;
  double initial_step = 1.0;
  double armijo_c = 1e-4;
  int max_iters = 5000;
  double grad_tol = 1e-8;
};

struct NonlinearResult {
  RecoveryModel model;
  Eigen::VectorXd latent;  // interior values z
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  std::vector<double> history;  // objective after each accepted step, starting with the initial value
};

NonlinearResult solve_nonlinear(const GramSystem& sys, const Nonlinearity& psi, const DescentOptions& options = {});

// Objective and gradient of the reduced problem at z, exposed for testing.
double nonlinear_objective(const GramSystem& sys, const Nonlinearity& psi, const Eigen::VectorXd& z,
                           Eigen::VectorXd* gradient = nullptr);

}  // namespace sigppde
