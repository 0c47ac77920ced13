#include "sigppde/linalg.hpp"

#include <cmath>
#include <string>

#include "sigppde/errors.hpp"

namespace sigppde::linalg {

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& a, std::optional<double> scale) {
  JitteredCholesky out;
  if (a.rows() != a.cols()) throw std::invalid_argument("jittered_cholesky: matrix is not square");
  if (a.size() == 0) return out;
  if (!a.allFinite()) throw NumericalError("jittered_cholesky: non-finite matrix entries");

  out.llt.compute(a);
  if (out.llt.info() == Eigen::Success) return out;

  const double trace = std::max(std::abs(scale ? *scale : a.trace()), 1e-300);
  const Eigen::Index n = a.rows();
  for (double level = 1e-12; level <= 1e-6 * 1.0000001; level *= 10.0) {
    const double jitter = level * trace;
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    out.llt.compute(shifted);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  throw NumericalError("jittered_cholesky: factorization failed at jitter 1e-6*trace (n=" +
                       std::to_string(n) + ")");
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_symmetric(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1.0);
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

}  // namespace sigppde::linalg
