// Copyright (c) 2026 The rnolab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace rno {

/// Runs fn(i) for i in [0, n) across `workers` threads in contiguous blocks.
/// Work items must be independent; callers own any result slots, so the
/// outcome does not depend on scheduling. Exceptions are rethrown (first one
/// by item index) after all workers finish.
inline void parallel_for(Eigen::Index n, int workers,
                         const std::function<void(Eigen::Index)>& fn) {
  if (n <= 0) return;
  if (workers < 1) workers = 1;
  if (workers > n) workers = static_cast<int>(n);
  if (workers == 1) {
    for (Eigen::Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::pair<Eigen::Index, std::exception_ptr>> errors;
  std::mutex err_mutex;
  Eigen::Index chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    Eigen::Index lo = t * chunk;
    Eigen::Index hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi]() {
      for (Eigen::Index i = lo; i < hi; ++i) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          errors.emplace_back(i, std::current_exception());
          return;
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (!errors.empty()) {
    auto first = errors.front();
    for (const auto& e : errors)
      if (e.first < first.first) first = e;
    std::rethrow_exception(first.second);
  }
}

}  // namespace rno
