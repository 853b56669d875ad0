#include "cvsat/parallel.hpp"

#include <algorithm>

namespace cvsat::parallel {

namespace {
int g_threads = 0;  // 0 = OpenMP default
}

Policy& default_policy() {
  static Policy policy = Policy::openmp;
  return policy;
}

void set_threads(int n) { g_threads = std::max(0, n); }

int threads() {
#if defined(_OPENMP)
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace cvsat::parallel
