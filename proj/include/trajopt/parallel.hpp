#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace trajopt {

/// Runs fn(i) for i in [begin, end) across a small pool of std::threads.
/// Falls back to the calling thread for short ranges. Each index is handled
/// exactly once; fn must only write state owned by index i. The first
/// exception thrown by any worker is rethrown on the calling thread.
inline void parallel_for(int begin, int end, const std::function<void(int)>& fn,
                         int grain = 8) {
  const int count = end - begin;
  if (count <= 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw < 2 || count <= grain) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  const int workers = std::min<int>(static_cast<int>(hw), (count + grain - 1) / grain);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn, &first_error, &error_mutex] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Fixed-order pairwise-tree sum over per-block slots. The combination order
/// depends only on the slot count, never on thread scheduling, so repeated
/// runs produce bit-identical results.
inline double tree_reduce(std::span<const double> slots) {
  std::vector<double> buf(slots.begin(), slots.end());
  const std::size_t n = buf.size();
  if (n == 0) return 0.0;
  for (std::size_t stride = 1; stride < n; stride *= 2) {
    for (std::size_t i = 0; i + stride < n; i += 2 * stride) {
      buf[i] += buf[i + stride];
    }
  }
  return buf[0];
}

/// Left-to-right sum; the reduction used when deterministic ordering is not
/// requested.
inline double linear_reduce(std::span<const double> slots) {
  double acc = 0.0;
  for (double v : slots) acc += v;
  return acc;
}

}  // namespace trajopt
