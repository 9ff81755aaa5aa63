#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace kernelgamma::detail {

// Worker count for data-parallel scans: KERNELGAMMA_THREADS when set to a
// positive integer, hardware concurrency otherwise.
inline unsigned worker_count() {
  if (const char* env = std::getenv("KERNELGAMMA_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && n >= 1) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1u;
}

// Number of contiguous chunks [0,n) will be cut into, given a minimum
// per-chunk grain. Callers size their per-chunk accumulator slots with this
// and combine them in chunk order, which keeps reductions deterministic for
// a fixed thread setting.
inline unsigned plan_chunks(std::size_t n, std::size_t grain) {
  if (n == 0) return 1;
  const std::size_t by_grain = (n + grain - 1) / grain;
  return static_cast<unsigned>(
      std::min<std::size_t>(worker_count(), std::max<std::size_t>(by_grain, 1)));
}

// Runs body(chunk_index, begin, end) over an even partition of [0,n) into
// `chunks` pieces. chunks == 1 runs inline on the calling thread.
template <typename Body>
void run_chunks(std::size_t n, unsigned chunks, const Body& body) {
  if (chunks <= 1 || n == 0) {
    body(0u, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  const std::size_t base = n / chunks;
  const std::size_t rem = n % chunks;
  std::size_t begin = 0;
  for (unsigned c = 0; c < chunks; ++c) {
    const std::size_t len = base + (c < rem ? 1 : 0);
    const std::size_t end = begin + len;
    pool.emplace_back([&body, c, begin, end] { body(c, begin, end); });
    begin = end;
  }
  for (auto& t : pool) t.join();
}

}  // namespace kernelgamma::detail
