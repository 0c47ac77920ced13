#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sigppde/paths.hpp"

namespace sigppde::oracle {

// Dense truncated signature: tensors[k] holds the d^k entries of the order-k term,
// flattened with the first index most significant.
struct TruncatedSignature {
  int level = 0;
  int dim = 0;
  std::vector<std::vector<double>> tensors;

  static TruncatedSignature unit(int dim, int level);
  // Hilbert-Schmidt norm over all orders.
  double norm() const;
  double dot(const TruncatedSignature& other) const;
};

TruncatedSignature segment_signature(const Eigen::VectorXd& delta, int level);
TruncatedSignature chen_concat(const TruncatedSignature& s1, const TruncatedSignature& s2);
TruncatedSignature path_signature(const Path& p, int level);

double truncated_kernel(const Path& gamma, const Path& tau, int level);

// Central difference (k(gamma + eps eta) - k(gamma - eps eta)) / (2 eps).
double fd_directional_derivative(const Path& gamma, const Path& tau, const Path& eta, int level, double eps);
// Four-point mixed stencil along eta and etabar.
double fd_second(const Path& gamma, const Path& tau, const Path& eta, const Path& etabar, int level, double eps);

}  // namespace sigppde::oracle
