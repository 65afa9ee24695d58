#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pdmp {

/// Fixed-size chunking of [0, n). The chunk layout depends only on `n` and
/// `chunk_size`, never on the thread count, so per-chunk partial results
/// merged in chunk order are bit-identical for any number of threads.
struct ChunkPlan {
  std::size_t n = 0;
  std::size_t chunk_size = 1;

  [[nodiscard]] std::size_t chunks() const noexcept {
    return n == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
  }
  [[nodiscard]] std::size_t begin(std::size_t c) const noexcept { return c * chunk_size; }
  [[nodiscard]] std::size_t end(std::size_t c) const noexcept {
    return std::min(n, (c + 1) * chunk_size);
  }
};

/// Runs fn(chunk_id, begin, end) for every chunk on up to `threads` workers.
/// The first exception thrown by a worker is rethrown on the caller.
template <class Fn>
void parallel_chunks(const ChunkPlan& plan, int threads, Fn&& fn) {
  const std::size_t chunks = plan.chunks();
  const std::size_t workers =
      std::min<std::size_t>(chunks, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c, plan.begin(c), plan.end(c));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        fn(c, plan.begin(c), plan.end(c));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace pdmp
