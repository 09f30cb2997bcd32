#pragma once

#include <cstddef>
#include <functional>

namespace wg
{
  // Worker count: WG_NUM_THREADS if set to a positive integer, otherwise the
  // hardware concurrency.
  unsigned int thread_count();

  // Calls body(i) for i in [0, n) on up to thread_count() threads. Iterations
  // must be independent. The first exception thrown by any iteration is
  // rethrown on the calling thread.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body);
} // namespace wg
