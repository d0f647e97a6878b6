#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fkmc {

/// Runs fn(chunk_index, begin, end) for every chunk of [0, n_items).
/// Chunk boundaries depend only on (n_items, chunk_size), never on the
/// worker count, so callers can reduce per-chunk results in index order
/// and obtain bit-identical output for any number of workers.
inline void parallel_chunks(std::uint64_t n_items, std::uint64_t chunk_size, int workers,
                            const std::function<void(std::uint64_t, std::uint64_t, std::uint64_t)>& fn) {
  if (n_items == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const std::uint64_t n_chunks = (n_items + chunk_size - 1) / chunk_size;

  auto run_chunk = [&](std::uint64_t c) {
    const std::uint64_t begin = c * chunk_size;
    const std::uint64_t end = std::min(begin + chunk_size, n_items);
    fn(c, begin, end);
  };

  if (workers <= 1 || n_chunks == 1) {
    for (std::uint64_t c = 0; c < n_chunks; ++c) run_chunk(c);
    return;
  }

  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::uint64_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= n_chunks) break;
      try {
        run_chunk(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };

  const int n_threads = static_cast<int>(std::min<std::uint64_t>(workers, n_chunks));
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fkmc
