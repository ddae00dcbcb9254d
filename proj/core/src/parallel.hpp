#pragma once

#include "svaro/lattice.hpp"

#include <omp.h>

#include <exception>

namespace svaro::detail {

inline int resolve_threads(int requested) {
  return requested > 0 ? requested : omp_get_max_threads();
}

/// Static-schedule parallel loop. If any iteration throws, the exception
/// from the lowest index is rethrown after the loop, so failures report the
/// same location for every thread count.
template <class F>
void parallel_for(Index n, int threads, F&& f) {
  Index bad = n;
  std::exception_ptr error;
#pragma omp parallel for schedule(static) num_threads(threads) if (n > 1 && threads > 1)
  for (Index i = 0; i < n; ++i) {
    try {
      f(i);
    } catch (...) {
#pragma omp critical(svaro_parallel_for_error)
      {
        if (i < bad) {
          bad = i;
          error = std::current_exception();
        }
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace svaro::detail
