#pragma once

#include <cstdint>
#include <random>

#include "sigppde/paths.hpp"

namespace sigppde::oracle {

// Piecewise-linear path on [0,1] with `segments` cells and one-variation drawn uniformly in
// [0.25 * max_variation, max_variation].
Path random_piecewise_linear(int channels, int segments, double max_variation, std::mt19937_64& rng);

struct SuiteOptions {
  int instances = 50;
  int channels = 2;
  int segments = 8;
  double max_variation = 2.0;
  int level = 12;
  int dyadic_order = 4;
  double fd_eps1 = 1e-4;
  double fd_eps2 = 1e-3;
  std::uint64_t seed = 2024;
};

// Goursat corner values against truncated-signature references on random instances.
struct SuiteReport {
  int instances = 0;
  double max_kernel_err = 0.0;  // |k - ref| / (1 + |ref|)
  double max_first_err = 0.0;   // absolute
  double max_second_err = 0.0;  // absolute
  int sig_bound_violations = 0;    // ||S(gamma)|| > exp(||gamma||_1)
  int kernel_bound_violations = 0; // |k| > exp(||gamma||_1 ||tau||_1)
  double runtime_ms = 0.0;
};

SuiteReport run_suite(const SuiteOptions& options = {});

}  // namespace sigppde::oracle
