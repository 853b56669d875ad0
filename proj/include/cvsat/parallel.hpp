#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace cvsat::parallel {

enum class Policy { serial, openmp };

/// Process-wide default policy for the parallel kernels. Results are
/// identical either way: workers write by index and reductions run
/// serially in index order.
Policy& default_policy();

void set_threads(int n);
int threads();

/// Index map: f(i) for i in [0, n). The serial branch is the reference
/// implementation the OpenMP branch is tested against. The first worker
/// exception is rethrown on the calling thread.
template <typename F>
void for_each_index(std::size_t n, F&& f, Policy policy) {
  if (policy == Policy::serial) {
    for (std::size_t i = 0; i < n; ++i) {
      f(i);
    }
    return;
  }
#if defined(_OPENMP)
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads()) \
    shared(failure, failed)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    if (failed.load(std::memory_order_relaxed)) {
      continue;
    }
    try {
      f(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(cvsat_parallel_failure)
      {
        if (!failure) {
          failure = std::current_exception();
        }
      }
      failed.store(true, std::memory_order_relaxed);
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
#else
  for (std::size_t i = 0; i < n; ++i) {
    f(i);
  }
#endif
}

template <typename F>
void for_each_index(std::size_t n, F&& f) {
  for_each_index(n, static_cast<F&&>(f), default_policy());
}

/// Map producing one value per index; deterministic output ordering.
template <typename T, typename F>
std::vector<T> map_index(std::size_t n, F&& f, Policy policy) {
  std::vector<T> out(n);
  for_each_index(n, [&](std::size_t i) { out[i] = f(i); }, policy);
  return out;
}

template <typename T, typename F>
std::vector<T> map_index(std::size_t n, F&& f) {
  return map_index<T>(n, static_cast<F&&>(f), default_policy());
}

}  // namespace cvsat::parallel
