#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace coresel {

/// Upper bound on worker threads. Results never depend on this value: every
/// task writes only its own output slot and reductions run in task order.
struct Parallelism {
  std::size_t threads = 1;
};

namespace detail {

/// Runs fn(i) for i in [0, count). If tasks throw, the exception of the
/// lowest failing index is rethrown on the calling thread after all workers
/// join, so error reporting is also independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t count, Parallelism par, Fn&& fn) {
  std::size_t workers = std::min(std::max<std::size_t>(par.threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::size_t first_index = count;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < first_index) {
          first_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

}  // namespace coresel
