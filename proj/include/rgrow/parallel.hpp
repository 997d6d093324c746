#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace rgrow {

// Static block partition of [0, count). Each index is visited exactly once
// and writes only its own output slot, so results do not depend on `threads`.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2 * workers) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (std::size_t i = 0; i < std::min(count, chunk); ++i) fn(i);
}

}  // namespace rgrow
