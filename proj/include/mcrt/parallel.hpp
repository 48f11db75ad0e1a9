#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace mcrt {

// Worker count: MCRT_THREADS if set (>=1), else hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MCRT_THREADS")) {
    try {
      long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(std::min<long>(v, 1024));
    } catch (...) {
    }
  }
  return hw;
}

// Run fn(worker, begin, end) over [0, count) split into contiguous blocks.
// Blocks are fixed by (count, workers) so results that depend only on the
// index are independent of scheduling.
template <typename Fn>
void parallel_blocks(std::size_t count, Fn&& fn, unsigned workers = worker_count()) {
  workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, count)));
  if (workers <= 1) {
    fn(0u, std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t b = std::min(count, w * chunk);
    const std::size_t e = std::min(count, b + chunk);
    pool.emplace_back([&fn, w, b, e] { fn(w, b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mcrt
