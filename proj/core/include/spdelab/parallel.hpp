#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spdelab {

/// Runs fn(chunk, worker) for chunk = 0..n_chunks-1 on `threads` workers.
/// Chunks are claimed dynamically, so callers must write results into
/// per-chunk slots and reduce them in chunk order afterwards. If several
/// chunks throw, the exception of the lowest chunk is rethrown.
template <class Fn>
void parallel_chunks(std::size_t n_chunks, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n_chunks));
  if (threads == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) fn(c, std::size_t{0});
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_chunk = n_chunks;
  auto worker = [&](std::size_t id) {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        fn(c, id);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (c < error_chunk) {
          error_chunk = c;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker, i);
  worker(0);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace spdelab
