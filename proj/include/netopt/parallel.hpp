#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace netopt {

// Runs fn(i) for i in [0, n). Each index writes only its own slot, so results do
// not depend on the worker count.
template <class Fn>
void parallel_for(std::ptrdiff_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::ptrdiff_t w = std::min<std::ptrdiff_t>(workers, n);
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<size_t>(w));
  for (std::ptrdiff_t t = 0; t < w; ++t)
    pool.emplace_back([&, t] {
      for (std::ptrdiff_t i = t; i < n; i += w) fn(i);
    });
}

}  // namespace netopt
