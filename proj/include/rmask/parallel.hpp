#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rmask {

// Number of workers used when the caller passes 0.
inline std::size_t default_workers() {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs body(begin, end, worker_id) over [0, n) split into chunks of `grain`
// items that workers claim dynamically. Callers must only write to outputs
// owned by the indices in their range; under that rule results do not depend
// on the worker count or on scheduling. The first exception thrown by any
// worker is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, std::size_t workers, std::size_t grain, Body&& body) {
  if (n == 0) return;
  if (workers == 0) workers = default_workers();
  grain = std::max<std::size_t>(1, grain);
  const std::size_t chunks = (n + grain - 1) / grain;
  workers = std::min(workers, chunks);
  if (workers <= 1) {
    body(std::size_t{0}, n, std::size_t{0});
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&](std::size_t worker) {
    try {
      for (;;) {
        const std::size_t chunk = next.fetch_add(1, std::memory_order_relaxed);
        if (chunk >= chunks) break;
        const std::size_t begin = chunk * grain;
        body(begin, std::min(n, begin + grain), worker);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(chunks);
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run, w);
  run(0);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace rmask
