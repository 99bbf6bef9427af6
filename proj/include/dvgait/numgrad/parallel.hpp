#pragma once

namespace dvgait::numgrad {

/// Caps kernel threads (Eigen and OpenMP). Values < 1 are treated as 1.
void set_num_threads(int threads);
int num_threads();
int available_cores();
/// Reads DVGAIT_THREADS; returns `fallback` when unset or invalid. A
/// fallback < 1 means the core count (more threads than cores make the
/// GEMM workers spin against each other).
int threads_from_env(int fallback = 0);

}  // namespace dvgait::numgrad
