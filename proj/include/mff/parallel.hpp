#pragma once

#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mff {

// Runs fn(i) for i in [0, n) across `workers` threads in fixed contiguous
// chunks.  Callers write per-index results into preallocated slots and fold
// them afterwards in index order, so outputs never depend on the worker
// count.
template <class F>
void parallel_for(std::uint64_t n, unsigned workers, F&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  unsigned k = static_cast<unsigned>(std::min<std::uint64_t>(workers, n));
  std::uint64_t chunk = (n + k - 1) / k;
  std::exception_ptr first_error;
  std::mutex err_mu;
  std::vector<std::thread> threads;
  threads.reserve(k);
  for (unsigned t = 0; t < k; ++t) {
    std::uint64_t lo = static_cast<std::uint64_t>(t) * chunk;
    std::uint64_t hi = std::min(n, lo + chunk);
    threads.emplace_back([&, lo, hi] {
      try {
        for (std::uint64_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mff
