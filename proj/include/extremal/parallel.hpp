#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace extremal {

/// Resolves a parallelism request: 0 means "auto" (hardware concurrency).
inline unsigned resolve_parallelism(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Runs body(i) for i in [0, count) on up to `parallelism` threads.
 *
 * Each index must write only to its own output slot; callers reduce the
 * slots in index order afterwards, which keeps results independent of the
 * thread count. The first exception thrown by any body is rethrown.
 */
template <class Body>
void parallel_for(std::size_t count, int parallelism, Body&& body) {
  const unsigned threads = std::min<std::size_t>(resolve_parallelism(parallelism), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace extremal
