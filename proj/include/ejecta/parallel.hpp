#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ejecta {

/// Runs fn(block) for block = 0..block_count-1 on up to `workers` threads.
/// Blocks are fixed units of work, so anything written into per-block slots
/// comes out identical for any worker count.
template <typename Fn>
void run_blocks(std::size_t block_count, int workers, Fn&& fn) {
  if (block_count == 0) return;
  const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(block_count)));
  if (n_threads == 1) {
    for (std::size_t b = 0; b < block_count; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= block_count) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ejecta
