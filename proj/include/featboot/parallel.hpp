#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace featboot {

/// Worker cap: FEATBOOT_THREADS if set, else hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("FEATBOOT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

/// Run fn(i) for i in [0, n) across worker threads. Each index is processed
/// exactly once; callers keep determinism by writing results into per-index
/// slots.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  for (std::thread& t : pool) t.join();
}

}  // namespace featboot
