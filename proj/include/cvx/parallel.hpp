#pragma once

namespace cvx::parallel {

// Thread count the kernels may use: hardware/OpenMP default, capped by the
// CONVEX_SCREEN_THREADS environment variable when set to a positive integer.
int max_threads();

// Installs the cap via omp_set_num_threads.  Called once from the CLI and
// benchmark entry points; library code just uses whatever OpenMP has.
void apply_thread_cap();

// True when the library was compiled with OpenMP.
bool compiled_with_openmp();

}  // namespace cvx::parallel
