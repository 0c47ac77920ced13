#include "sigppde/sig_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace sigppde::oracle {

TruncatedSignature TruncatedSignature::unit(int dim, int level) {
  if (dim < 1 || level < 0) throw std::invalid_argument("TruncatedSignature: invalid shape");
  TruncatedSignature s;
  s.level = level;
  s.dim = dim;
  s.tensors.resize(level + 1);
  std::size_t size = 1;
  for (int k = 0; k <= level; ++k) {
    s.tensors[k].assign(size, 0.0);
    size *= static_cast<std::size_t>(dim);
  }
  s.tensors[0][0] = 1.0;
  return s;
}

double TruncatedSignature::norm() const { return std::sqrt(dot(*this)); }

double TruncatedSignature::dot(const TruncatedSignature& other) const {
  if (level != other.level || dim != other.dim) throw std::invalid_argument("TruncatedSignature: shape mismatch");
  double acc = 0.0;
  for (int k = 0; k <= level; ++k)
    for (std::size_t i = 0; i < tensors[k].size(); ++i) acc += tensors[k][i] * other.tensors[k][i];
  return acc;
}

TruncatedSignature segment_signature(const Eigen::VectorXd& delta, int level) {
  const int d = static_cast<int>(delta.size());
  TruncatedSignature s = TruncatedSignature::unit(d, level);
  for (int k = 1; k <= level; ++k) {
    const auto& prev = s.tensors[k - 1];
    auto& cur = s.tensors[k];
    for (std::size_t i = 0; i < prev.size(); ++i)
      for (int c = 0; c < d; ++c) cur[i * d + c] = prev[i] * delta(c) / k;
  }
  return s;
}

TruncatedSignature chen_concat(const TruncatedSignature& s1, const TruncatedSignature& s2) {
  if (s1.level != s2.level || s1.dim != s2.dim) throw std::invalid_argument("chen_concat: shape mismatch");
  TruncatedSignature z = TruncatedSignature::unit(s1.dim, s1.level);
  z.tensors[0][0] = 0.0;
  for (int k = 0; k <= s1.level; ++k) {
    auto& out = z.tensors[k];
    for (int j = 0; j <= k; ++j) {
      const auto& v = s1.tensors[j];
      const auto& w = s2.tensors[k - j];
      const std::size_t stride = w.size();
      for (std::size_t a = 0; a < v.size(); ++a) {
        const double va = v[a];
        if (va == 0.0) continue;
        double* dst = out.data() + a * stride;
        for (std::size_t b = 0; b < stride; ++b) dst[b] += va * w[b];
      }
    }
  }
  return z;
}

TruncatedSignature path_signature(const Path& p, int level) {
  TruncatedSignature s = TruncatedSignature::unit(p.channels(), level);
  for (int k = 0; k + 1 < p.n_nodes(); ++k)
    s = chen_concat(s, segment_signature(p.increment(k).transpose(), level));
  return s;
}

double truncated_kernel(const Path& gamma, const Path& tau, int level) {
  return path_signature(gamma, level).dot(path_signature(tau, level));
}

double fd_directional_derivative(const Path& gamma, const Path& tau, const Path& eta, int level, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("fd_directional_derivative: eps must be positive");
  const auto st = path_signature(tau, level);
  const double up = path_signature(gamma.plus(eta, eps), level).dot(st);
  const double down = path_signature(gamma.plus(eta, -eps), level).dot(st);
  return (up - down) / (2.0 * eps);
}

double fd_second(const Path& gamma, const Path& tau, const Path& eta, const Path& etabar, int level, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("fd_second: eps must be positive");
  const auto st = path_signature(tau, level);
  auto k = [&](double a, double b) {
    return path_signature(gamma.plus(eta, a * eps).plus(etabar, b * eps), level).dot(st);
  };
  return (k(1, 1) - k(1, -1) - k(-1, 1) + k(-1, -1)) / (4.0 * eps * eps);
}

}  // namespace sigppde::oracle
