#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace renewalq {

/// Runs body(i) for i in [0, n) on up to `threads` workers. Iterations must
/// write only to their own slot; no ordering is implied.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Mean of sample(i) over i in [0, n), accumulated strictly in index order so
/// the result is bit-identical for any worker count.
template <class T, class Sample>
T ordered_mean(std::size_t n, int threads, const T& zero, Sample&& sample) {
  constexpr std::size_t kBlock = 4096;
  T sum = zero;
  std::vector<T> buffer;
  for (std::size_t start = 0; start < n; start += kBlock) {
    const std::size_t len = std::min(kBlock, n - start);
    buffer.assign(len, zero);
    parallel_for(len, threads, [&](std::size_t k) { buffer[k] = sample(start + k); });
    for (const auto& v : buffer) sum += v;
  }
  return sum / static_cast<double>(n);
}

/// Worker count from RENEWALQ_THREADS, else hardware concurrency.
inline int default_thread_count() {
  if (const char* env = std::getenv("RENEWALQ_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace renewalq
