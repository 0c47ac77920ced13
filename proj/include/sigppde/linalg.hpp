#pragma once

#include <optional>

#include <Eigen/Dense>

namespace sigppde::linalg {

// Cholesky factor of a symmetric matrix with diagonal jitter escalation.
// Jitter starts at 1e-12 * trace and grows by 10x up to 1e-6 * trace.
struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

// Throws NumericalError when no jitter level on the ladder succeeds.
// scale replaces trace(a) as the ladder base when given.
JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& a, std::optional<double> scale = std::nullopt);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& a);

// True when a is symmetric to the given absolute tolerance scaled by max |a_ij|.
bool is_symmetric(const Eigen::MatrixXd& a, double rel_tol);

}  // namespace sigppde::linalg
