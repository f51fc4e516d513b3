#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace liger {

namespace detail {
inline std::atomic<unsigned>& thread_cap() {
  static std::atomic<unsigned> cap{0};
  return cap;
}
}  // namespace detail

// Caps the worker count used by parallel_for. 0 means "hardware concurrency".
inline void set_thread_count(unsigned n) { detail::thread_cap().store(n); }

inline unsigned thread_count() {
  unsigned cap = detail::thread_cap().load();
  if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
  return cap;
}

// Runs fn(i) for i in [0, n). Each index must write only to its own output
// slot; results are then independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_chunk = 256) {
  const std::size_t workers =
      std::min<std::size_t>(thread_count(), (n + min_chunk - 1) / std::max<std::size_t>(min_chunk, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace liger
