#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sdestab::detail {

// Runs body(r) for r in [0, count) over `threads` workers (0 = hardware
// concurrency) in contiguous chunks. Results must go into per-r slots so the
// outcome is independent of the thread count; the first exception wins.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& body) {
  int k = threads == 0 ? static_cast<int>(std::thread::hardware_concurrency())
                       : threads;
  k = std::max(1, std::min<int>(k, static_cast<int>(count)));
  if (k <= 1) {
    for (std::size_t r = 0; r < count; ++r) body(r);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const std::size_t chunk = (count + k - 1) / k;
  for (int t = 0; t < k; ++t) {
    const std::size_t begin = chunk * static_cast<std::size_t>(t);
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t r = begin; r < end; ++r) body(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace sdestab::detail
