#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace crs::detail {

/// Fixed partition of [0, n) into chunks whose boundaries do not depend on the
/// worker count. Results computed per chunk and merged in chunk order are
/// therefore identical for any number of workers.
struct ChunkPlan {
  std::size_t n = 0;
  std::size_t chunk = 1;

  static ChunkPlan make(std::size_t n, std::size_t chunk_size) {
    return {n, std::max<std::size_t>(chunk_size, 1)};
  }
  std::size_t count() const { return (n + chunk - 1) / chunk; }
  std::size_t begin(std::size_t c) const { return c * chunk; }
  std::size_t end(std::size_t c) const { return std::min(n, (c + 1) * chunk); }
};

/// Runs fn(c) for every chunk index on up to `workers` threads.
template <class Fn>
void for_each_chunk(std::size_t n_chunks, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n_chunks, 1));
  if (workers == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < n_chunks; c = next++) {
        try {
          fn(c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace crs::detail
