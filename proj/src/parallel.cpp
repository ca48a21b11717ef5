#include "cvx/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cvx::parallel {

int max_threads() {
#ifdef _OPENMP
  int threads = omp_get_max_threads();
#else
  int threads = 1;
#endif
  if (const char* env = std::getenv("CONVEX_SCREEN_THREADS")) {
    try {
      int cap = std::stoi(env);
      if (cap > 0) threads = std::min(threads, cap);
    } catch (...) {
      // unparseable value: ignore, keep the OpenMP default
    }
  }
  return std::max(1, threads);
}

void apply_thread_cap() {
#ifdef _OPENMP
  omp_set_num_threads(max_threads());
#endif
}

bool compiled_with_openmp() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

}  // namespace cvx::parallel
