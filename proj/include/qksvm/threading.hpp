#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace qksvm {

// Runs fn(i) for i in [begin, end), split into contiguous chunks across up to
// `threads` workers. Each index is visited exactly once, so output is
// deterministic as long as fn writes disjoint locations.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, unsigned threads, Fn&& fn) {
  const std::size_t n = end > begin ? end - begin : 0;
  if (n == 0) return;
  if (threads <= 1 || n == 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace qksvm
