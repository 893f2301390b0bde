#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lensless {

namespace detail {
inline std::atomic<std::size_t>& thread_setting() {
  static std::atomic<std::size_t> setting{0};
  return setting;
}
inline thread_local bool in_parallel_region = false;
}  // namespace detail

/// Worker count for parallel loops. 0 means "use hardware concurrency";
/// LENSLESS_THREADS overrides the default when no explicit value was set.
inline void set_thread_count(std::size_t n) { detail::thread_setting() = n; }

[[nodiscard]] inline std::size_t thread_count() {
  std::size_t n = detail::thread_setting();
  if (n == 0) {
    if (const char* env = std::getenv("LENSLESS_THREADS")) n = std::strtoul(env, nullptr, 10);
  }
  if (n == 0) n = std::thread::hardware_concurrency();
  return std::max<std::size_t>(n, 1);
}

/// Runs fn(i) for i in [0, n). Work items are handed out dynamically, so fn
/// must write only to slot i of any shared output; callers reduce the slots in
/// index order afterwards, which keeps results independent of thread count.
/// If several items throw, the exception from the lowest index is rethrown.
/// Nested calls run serially on the calling worker.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = detail::in_parallel_region ? 1 : std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = n;

  auto work = [&] {
    const bool outer = detail::in_parallel_region;
    detail::in_parallel_region = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
    detail::in_parallel_region = outer;
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 0; t + 1 < workers; ++t) pool.emplace_back(work);
    work();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace lensless
