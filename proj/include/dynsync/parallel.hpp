#pragma once

#include <cstdint>
#include <exception>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dynsync {

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// fn(i) for i in [0, count), on `threads` OpenMP threads when threads > 1.
// Iterations must write to disjoint state. The first exception thrown by any
// iteration is rethrown on the calling thread.
template <class F>
void parallel_for(std::int64_t count, int threads, F&& fn) {
#ifdef _OPENMP
  if (threads > 1 && count > 1) {
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
#pragma omp critical(dynsync_parallel_for_err)
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#endif
  for (std::int64_t i = 0; i < count; ++i) fn(i);
}

}  // namespace dynsync
