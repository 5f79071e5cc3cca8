#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace swald {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? int(hw) : 1;
}

// Static contiguous partition of [0, n). Work items must be independent and
// write only to their own slots, which makes results identical for every
// thread count.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t)>& chunk) {
  int t = std::max(1, resolve_threads(threads));
  if (std::size_t(t) > n) t = int(n ? n : 1);
  if (t <= 1 || n == 0) {
    chunk(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  const std::size_t base = n / t, extra = n % t;
  std::size_t begin = 0;
  for (int k = 0; k < t; ++k) {
    const std::size_t len = base + (std::size_t(k) < extra ? 1 : 0);
    const std::size_t end = begin + len;
    pool.emplace_back([&, k, begin, end] {
      try {
        chunk(begin, end);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace swald
