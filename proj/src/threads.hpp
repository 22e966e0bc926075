#pragma once

// Minimal deterministic work-sharing helper.
//
// parallel_for splits [0, n) into the caller's chunks and runs them on a
// temporary thread pool. Results must be combined by the caller in chunk
// order so that output is independent of how many threads actually ran.
// FB_THREADS (environment) caps the pool size; FB_THREADS=1 forces serial.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fb {

inline int thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  int n = hw == 0 ? 1 : static_cast<int>(hw);
  if (const char* env = std::getenv("FB_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

// Runs fn(chunk_index) for chunk_index in [0, nchunks). Chunks are claimed
// dynamically; fn must write only to its own chunk's slot.
inline void parallel_chunks(std::size_t nchunks,
                            const std::function<void(std::size_t)>& fn) {
  int nthreads = std::min<std::size_t>(thread_budget(), nchunks);
  if (nthreads <= 1) {
    for (std::size_t c = 0; c < nchunks; ++c) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first_error = nullptr;
  std::mutex error_mu;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t c = next.fetch_add(1);
        if (c >= nchunks) return;
        try {
          fn(c);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fb
