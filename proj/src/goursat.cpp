#include "sigppde/goursat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigppde/errors.hpp"

namespace sigppde {

namespace {

struct Entry {
  int d;
  int field;
  double mult;
};

// Lower-triangular coupling: component c depends on components lower[c][*].d < c and on itself
// through field 0.
template <int NC>
struct Coupling {
  std::array<std::array<Entry, 8>, NC> lower{};
  std::array<int, NC> count{};
};

template <int NC>
struct Engine {
  const Coupling<NC>& coupling;
  const std::vector<double>& cell_fields;  // per coarse cell, nf values scaled by 4^-order
  int nf;
  int coarse_cols;
  int order;
  Scheme scheme;

  const double* fields_for(int ri, int rj) const {
    return cell_fields.data() + (static_cast<std::size_t>(ri >> order) * coarse_cols + (rj >> order)) * nf;
  }

  // Advances one refined cell whose lower-left node is (ri, rj).
  inline void update(const double* k00, const double* k01, const double* k10, double* k11, int ri,
                     int rj) const {
    const double* a = fields_for(ri, rj);
    const double r = a[0];
    for (int c = 0; c < NC; ++c) {
      if (scheme == Scheme::Rectangle) {
        double f = 0.0;
        for (int e = 0; e < coupling.count[c]; ++e) {
          const Entry& en = coupling.lower[c][e];
          f += en.mult * a[en.field] * k00[en.d];
        }
        f += r * k00[c];
        k11[c] = k01[c] + k10[c] - k00[c] + f;
        continue;
      }
      double f1 = 0.0, f2 = 0.0, f3 = 0.0, f4 = 0.0;
      for (int e = 0; e < coupling.count[c]; ++e) {
        const Entry& en = coupling.lower[c][e];
        const double rc = en.mult * a[en.field];
        f1 += rc * k00[en.d];
        f2 += rc * k01[en.d];
        f3 += rc * k10[en.d];
        f4 += rc * k11[en.d];
      }
      f1 += r * k00[c];
      f2 += r * k01[c];
      f3 += r * k10[c];
      const double pred = k10[c] + k01[c] - k00[c] + f1;
      f4 += r * pred;
      k11[c] = k01[c] + k10[c] - k00[c] + 0.25 * (f1 + f2 + f3 + f4);
    }
  }
};

void report_non_finite(int ri, int rj, int order) {
  throw NumericalError("goursat: non-finite value at cell (" + std::to_string(ri >> order) + "," +
                       std::to_string(rj >> order) + ")");
}

template <int NC>
bool finite(const double* k) {
  for (int c = 0; c < NC; ++c)
    if (!std::isfinite(k[c])) return false;
  return true;
}

// Node callback receives (coarse_i, coarse_j, values) for nodes on the coarse lattice.
template <int NC, class Sink>
std::array<double, NC> march(const Engine<NC>& eng, int coarse_rows, int coarse_cols, const GoursatOptions& opt,
                             Sink&& sink) {
  const int o = eng.order;
  const int R = coarse_rows << o;
  const int C = coarse_cols << o;
  const int mask = (1 << o) - 1;
  std::array<double, NC> boundary{};
  boundary[0] = 1.0;

  auto emit = [&](int I, int J, const double* k) {
    if (((I | J) & mask) == 0) sink(I >> o, J >> o, k);
  };

  if (opt.traversal == Traversal::Serial) {
    std::vector<double> prev(static_cast<std::size_t>(C + 1) * NC), cur(prev.size());
    for (int J = 0; J <= C; ++J) {
      std::copy(boundary.begin(), boundary.end(), prev.begin() + static_cast<std::size_t>(J) * NC);
      emit(0, J, prev.data() + static_cast<std::size_t>(J) * NC);
    }
    for (int I = 1; I <= R; ++I) {
      std::copy(boundary.begin(), boundary.end(), cur.begin());
      emit(I, 0, cur.data());
      for (int J = 1; J <= C; ++J) {
        double* k11 = cur.data() + static_cast<std::size_t>(J) * NC;
        eng.update(prev.data() + static_cast<std::size_t>(J - 1) * NC, prev.data() + static_cast<std::size_t>(J) * NC,
                   cur.data() + static_cast<std::size_t>(J - 1) * NC, k11, I - 1, J - 1);
        if (!finite<NC>(k11)) report_non_finite(I - 1, J - 1, o);
        emit(I, J, k11);
      }
      std::swap(prev, cur);
    }
    std::array<double, NC> out;
    std::copy_n(prev.data() + static_cast<std::size_t>(C) * NC, NC, out.begin());
    return out;
  }

  // Anti-diagonal buffers indexed by the row I.
  const std::size_t stride = static_cast<std::size_t>(R + 1) * NC;
  std::vector<double> d2(stride), d1(stride), d0(stride);
  auto at = [&](std::vector<double>& buf, int I) { return buf.data() + static_cast<std::size_t>(I) * NC; };
  // Diagonal 0: node (0,0); diagonal 1: nodes (0,1), (1,0).
  std::copy(boundary.begin(), boundary.end(), at(d1, 0));
  emit(0, 0, at(d1, 0));
  for (int s = 1; s <= R + C; ++s) {
    const int lo = std::max(0, s - C);
    const int hi = std::min(R, s);
    const int ilo = std::max(1, s - C);
    const int ihi = std::min(R, s - 1);
    // Boundary nodes on this diagonal.
    if (lo == 0) {
      std::copy(boundary.begin(), boundary.end(), at(d0, 0));
      emit(0, s, at(d0, 0));
    }
    if (hi == s) {
      std::copy(boundary.begin(), boundary.end(), at(d0, s));
      emit(s, 0, at(d0, s));
    }
    const int len = ihi - ilo + 1;
    if (len > 0) {
      int bad = -1;
#pragma omp parallel for schedule(static) if (len >= opt.parallel_threshold)
      for (int I = ilo; I <= ihi; ++I) {
        const int J = s - I;
        double* k11 = at(d0, I);
        eng.update(at(d2, I - 1), at(d1, I - 1), at(d1, I), k11, I - 1, J - 1);
        if (!finite<NC>(k11)) {
#pragma omp critical(goursat_bad)
          if (bad < 0 || I < bad) bad = I;
        }
      }
      if (bad >= 0) report_non_finite(bad - 1, s - bad - 1, o);
      for (int I = ilo; I <= ihi; ++I) emit(I, s - I, at(d0, I));
    }
    std::swap(d2, d1);
    std::swap(d1, d0);
  }
  std::array<double, NC> out;
  std::copy_n(at(d1, R), NC, out.begin());
  return out;
}

std::vector<double> pack_fields(const std::vector<const Eigen::MatrixXd*>& mats, int order) {
  const Eigen::Index rows = mats[0]->rows();
  const Eigen::Index cols = mats[0]->cols();
  const std::size_t nf = mats.size();
  const double scale = std::ldexp(1.0, -2 * order);
  std::vector<double> out(static_cast<std::size_t>(rows * cols) * nf);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      for (std::size_t f = 0; f < nf; ++f)
        out[(static_cast<std::size_t>(i * cols + j)) * nf + f] = (*mats[f])(i, j) * scale;
  return out;
}

void check_options(const GoursatOptions& opt) {
  if (opt.dyadic_order < 0 || opt.dyadic_order > 12)
    throw std::invalid_argument("goursat: dyadic_order must lie in [0,12]");
}

void check_shape(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& m) {
  if (m.rows() != ref.rows() || m.cols() != ref.cols())
    throw std::invalid_argument("goursat: A-field shape mismatch");
  if (ref.rows() < 1 || ref.cols() < 1) throw std::invalid_argument("goursat: empty A-field");
}

}  // namespace

GoursatSolution solve(const AField& fields, const GoursatOptions& options) {
  check_options(options);
  check_shape(fields.a, fields.a);
  check_shape(fields.a, fields.a_eta);
  check_shape(fields.a, fields.a_etabar);
  check_shape(fields.a, fields.a_eta_etabar);
  const int rows = static_cast<int>(fields.a.rows());
  const int cols = static_cast<int>(fields.a.cols());

  Coupling<4> cp;
  cp.count = {0, 1, 1, 3};
  cp.lower[1][0] = {0, 1, 1.0};
  cp.lower[2][0] = {0, 2, 1.0};
  cp.lower[3][0] = {0, 3, 1.0};
  cp.lower[3][1] = {1, 2, 1.0};
  cp.lower[3][2] = {2, 1, 1.0};

  const auto packed = pack_fields({&fields.a, &fields.a_eta, &fields.a_etabar, &fields.a_eta_etabar},
                                  options.dyadic_order);
  Engine<4> eng{cp, packed, 4, cols, options.dyadic_order, options.scheme};

  GoursatSolution sol;
  sol.dyadic_order = options.dyadic_order;
  if (options.full_surfaces) {
    sol.k1.resize(rows + 1, cols + 1);
    sol.k2.resize(rows + 1, cols + 1);
    sol.k3.resize(rows + 1, cols + 1);
    sol.k4.resize(rows + 1, cols + 1);
  }
  auto sink = [&](int i, int j, const double* k) {
    if (!options.full_surfaces) return;
    sol.k1(i, j) = k[0];
    sol.k2(i, j) = k[1];
    sol.k3(i, j) = k[2];
    sol.k4(i, j) = k[3];
  };
  const auto corner = march<4>(eng, rows, cols, options, sink);
  std::copy(corner.begin(), corner.end(), sol.corner.begin());
  return sol;
}

GoursatSolution solve(const Path& gamma, const Path& tau, const Path& eta, const Path& etabar,
                      const AField& fields, int dyadic_order) {
  if (fields.a.rows() != gamma.n_nodes() - 1 || fields.a.cols() != tau.n_nodes() - 1)
    throw std::invalid_argument("goursat: fields are not shaped for (gamma, tau)");
  if (!(eta.grid() == gamma.grid()) || !(etabar.grid() == gamma.grid()))
    throw std::invalid_argument("goursat: directions must share the grid of gamma");
  GoursatOptions opt;
  opt.dyadic_order = dyadic_order;
  return solve(fields, opt);
}

double kernel_only(const Eigen::MatrixXd& a, const GoursatOptions& options) {
  check_options(options);
  check_shape(a, a);
  Coupling<1> cp;
  const auto packed = pack_fields({&a}, options.dyadic_order);
  Engine<1> eng{cp, packed, 1, static_cast<int>(a.cols()), options.dyadic_order, options.scheme};
  auto sink = [](int, int, const double*) {};
  return march<1>(eng, static_cast<int>(a.rows()), static_cast<int>(a.cols()), options, sink)[0];
}

double kernel_only(const Path& gamma, const Path& tau, const AField& fields, int dyadic_order) {
  if (fields.a.rows() != gamma.n_nodes() - 1 || fields.a.cols() != tau.n_nodes() - 1)
    throw std::invalid_argument("goursat: fields are not shaped for (gamma, tau)");
  GoursatOptions opt;
  opt.dyadic_order = dyadic_order;
  return kernel_only(fields.a, opt);
}

BilateralCorners solve_bilateral(const BilateralField& fields, const GoursatOptions& options) {
  check_options(options);
  for (const auto& m : fields.a) check_shape(fields.a[0], m);
  static const int binom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
  Coupling<9> cp;
  for (int p = 0; p <= 2; ++p) {
    for (int q = 0; q <= 2; ++q) {
      const int c = 3 * p + q;
      int n = 0;
      for (int pp = 0; pp <= p; ++pp) {
        for (int qq = 0; qq <= q; ++qq) {
          if (pp == p && qq == q) continue;
          const int field = 3 * (p - pp) + (q - qq);
          if (!fields.nonzero[field]) continue;
          cp.lower[c][n++] = {3 * pp + qq, field, static_cast<double>(binom[p][pp] * binom[q][qq])};
        }
      }
      cp.count[c] = n;
    }
  }
  std::vector<const Eigen::MatrixXd*> mats;
  for (const auto& m : fields.a) mats.push_back(&m);
  const auto packed = pack_fields(mats, options.dyadic_order);
  Engine<9> eng{cp, packed, 9, static_cast<int>(fields.cols()), options.dyadic_order, options.scheme};
  auto sink = [](int, int, const double*) {};
  const auto corner =
      march<9>(eng, static_cast<int>(fields.rows()), static_cast<int>(fields.cols()), options, sink);
  BilateralCorners out;
  std::copy(corner.begin(), corner.end(), out.k.begin());
  return out;
}

}  // namespace sigppde
