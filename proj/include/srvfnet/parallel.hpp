#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace srvfnet {

/// Runs fn(i) for i in [0, n) split into contiguous blocks across `workers`
/// threads. Serial when workers <= 1. The first exception thrown by any
/// block is rethrown on the calling thread after all blocks finish, so
/// results written by index stay deterministic regardless of thread count.
inline void parallel_for(int n, int workers,
                         const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int blocks = std::min(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(blocks - 1);
  std::exception_ptr first_error;
  std::mutex error_lock;

  auto run_block = [&](int block) {
    const int lo = static_cast<int>(static_cast<long long>(n) * block / blocks);
    const int hi =
        static_cast<int>(static_cast<long long>(n) * (block + 1) / blocks);
    try {
      for (int i = lo; i < hi; ++i) fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> guard(error_lock);
      if (!first_error) first_error = std::current_exception();
    }
  };

  for (int b = 1; b < blocks; ++b) pool.emplace_back(run_block, b);
  run_block(0);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace srvfnet
