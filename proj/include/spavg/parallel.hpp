#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spavg {

/// Process-wide worker cap for parallel_for.  0 means "hardware".
inline int& max_threads() {
  static int value = 0;
  return value;
}

inline void set_max_threads(int n) { max_threads() = n; }

/// Run fn(i) for i in [0, n).  Work is pulled from a shared counter, so
/// callers must write any result into a slot indexed by i; with that
/// convention the output is identical for every thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  int workers = max_threads() > 0
                    ? max_threads()
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (n <= 1 || workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (static_cast<std::size_t>(workers) > n) workers = static_cast<int>(n);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace spavg
