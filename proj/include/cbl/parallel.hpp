#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cbl {

/// Number of worker threads used for trial-parallel loops. Defaults to the
/// hardware concurrency; 0 restores the default.
void set_worker_threads(unsigned n);
unsigned worker_threads();

/// Runs `body(acc, i)` for i in [0, count) and folds the per-block
/// accumulators with `merge(into, from)` in block order.
///
/// Items are grouped into fixed-size blocks independent of the thread count,
/// so floating-point reductions are bit-identical on any machine.
template <class Acc, class MakeAcc, class Body, class Merge>
Acc reduce_blocks(std::int64_t count, MakeAcc make_acc, Body body, Merge merge,
                  std::int64_t block_size = 512) {
  const std::int64_t blocks = count <= 0 ? 0 : (count + block_size - 1) / block_size;
  std::vector<Acc> partial;
  partial.reserve(static_cast<std::size_t>(blocks));
  for (std::int64_t b = 0; b < blocks; ++b) partial.push_back(make_acc());

  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::int64_t b = next++; b < blocks; b = next++) {
      try {
        const std::int64_t lo = b * block_size;
        const std::int64_t hi = std::min(count, lo + block_size);
        Acc& acc = partial[static_cast<std::size_t>(b)];
        for (std::int64_t i = lo; i < hi; ++i) body(acc, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::int64_t>(worker_threads(), std::max<std::int64_t>(blocks, 1)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  Acc total = make_acc();
  for (Acc& p : partial) merge(total, p);
  return total;
}

}  // namespace cbl
