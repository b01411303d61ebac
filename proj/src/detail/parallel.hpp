#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace auxref::detail {

// Runs fn(begin, end) over contiguous blocks of [0, n). Each index is handled
// by exactly one call, so per-index results do not depend on `threads`.
template <typename Fn>
void parallel_blocks(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    if (begin < end) pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(std::size_t{0}, std::min(n, chunk));
}

}  // namespace auxref::detail
