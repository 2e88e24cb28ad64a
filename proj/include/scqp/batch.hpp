// Copyright 2026 The scqp authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "scqp/solver.hpp"
#include "scqp/types.hpp"

namespace scqp {

/// Worker count for batch operations: SCQP_THREADS when set to a positive
/// integer, otherwise the hardware concurrency (at least 1).
inline unsigned batch_thread_count() {
  if (const char* env = std::getenv("SCQP_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed > 0) return static_cast<unsigned>(parsed);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Applies fn to every index in [0, count) across a thread pool. Each index
/// is processed by exactly one worker; fn must be safe to call concurrently
/// for distinct indices. The first exception thrown by any worker is
/// rethrown on the calling thread after all workers join.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                         unsigned threads = 0) {
  if (threads == 0) threads = batch_thread_count();
  if (count == 0) return;
  if (threads <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  const unsigned spawn = static_cast<unsigned>(
      std::min<std::size_t>(threads, count));
  pool.reserve(spawn);
  for (unsigned t = 0; t < spawn; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Solves an independent batch of problems as a parallel map. Results are
/// positionally aligned with the inputs.
inline std::vector<SolveResult> solve_batch(const std::vector<QpProblem>& problems,
                                            const Settings& settings = {},
                                            unsigned threads = 0) {
  std::vector<SolveResult> results(problems.size());
  parallel_for(problems.size(),
               [&](std::size_t i) { results[i] = solve(problems[i], settings); }, threads);
  return results;
}

}  // namespace scqp
