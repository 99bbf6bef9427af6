#include "dvgait/numgrad/parallel.hpp"

#include <Eigen/Core>
#include <cstdlib>
#include <string>
#include <thread>

#ifdef DVGAIT_HAVE_OPENMP
#include <omp.h>
#endif

namespace dvgait::numgrad {

namespace {
int g_threads = 1;
}

void set_num_threads(int threads) {
  g_threads = threads < 1 ? 1 : threads;
  Eigen::setNbThreads(g_threads);
#ifdef DVGAIT_HAVE_OPENMP
  omp_set_num_threads(g_threads);
#endif
}

int num_threads() { return g_threads; }

int available_cores() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

int threads_from_env(int fallback) {
  if (fallback < 1) fallback = available_cores();
  const char* raw = std::getenv("DVGAIT_THREADS");
  if (!raw || !*raw) return fallback;
  try {
    const int v = std::stoi(raw);
    return v >= 1 ? v : fallback;
  } catch (const std::exception&) {
    return fallback;
  }
}

}  // namespace dvgait::numgrad
