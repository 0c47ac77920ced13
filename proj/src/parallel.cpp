#include "sigppde/parallel.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#include <omp.h>

namespace sigppde {

int configure_threads(std::optional<int> requested) {
  if (!requested) {
    if (const char* env = std::getenv("SIGPPDE_THREADS"); env && *env) {
      try {
        requested = std::stoi(env);
      } catch (const std::exception&) {
        throw std::invalid_argument("SIGPPDE_THREADS must be a positive integer");
      }
    }
  }
  if (requested) {
    if (*requested < 1) throw std::invalid_argument("thread count must be positive");
    omp_set_num_threads(*requested);
  }
  return omp_get_max_threads();
}

}  // namespace sigppde
