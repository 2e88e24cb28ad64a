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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scqp/batch.hpp"
#include "scqp/diff.hpp"
#include "scqp/problem.hpp"
#include "scqp/solver.hpp"

namespace scqp {

enum class BenchFamily { box, general };
enum class BenchTol { low, high };  // eps_abs = eps_rel = 1e-3 / 1e-5

inline const char* to_string(BenchFamily f) { return f == BenchFamily::box ? "box" : "general"; }
inline const char* to_string(BenchTol t) { return t == BenchTol::low ? "low" : "high"; }

struct BenchConfig {
  BenchFamily family = BenchFamily::box;
  std::vector<Index> n_values = {10, 100, 500};
  int m_ratio = 1;  ///< m = ratio * n for the general family; box always has m = n
  BenchTol tol = BenchTol::low;
  int trials = 10;
  unsigned threads = 0;  ///< workers for the parallel map; 0 = auto
  std::uint64_t seed = 0;
};

/// One CSV row: runtime quantiles and solve statistics for a configuration.
struct BenchRow {
  std::string family;
  Index n = 0;
  Index m = 0;
  std::string tol;
  double median_fwd_ms = 0.0;
  double p95_fwd_ms = 0.0;
  double median_bwd_ms = 0.0;
  double iters_median = 0.0;
  double solved_frac = 0.0;
};

inline const char* bench_csv_header() {
  return "family,n,m,tol,median_fwd_ms,p95_fwd_ms,median_bwd_ms,iters_median,solved_frac";
}

namespace detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 == 1 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

inline double p95_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(v.size())));
  return v[std::min(rank > 0 ? rank - 1 : 0, v.size() - 1)];
}

}  // namespace detail

/// Generates `trials` seeded problems for one (family, n) cell, solves and
/// differentiates each (parallel map over trials), and aggregates runtimes.
/// Iteration counts and statuses are seed-deterministic; timings are not.
inline BenchRow run_bench_cell(BenchFamily family, Index n, int m_ratio, BenchTol tol,
                               int trials, std::uint64_t seed, unsigned threads = 0) {
  const Index m = family == BenchFamily::box ? n : static_cast<Index>(m_ratio) * n;
  Settings settings;
  const double eps = tol == BenchTol::low ? 1e-3 : 1e-5;
  settings.eps_abs = eps;
  settings.eps_rel = eps;

  std::vector<QpProblem> problems;
  problems.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(t);
    problems.push_back(family == BenchFamily::box ? generate_random_box_qp(n, s)
                                                  : generate_random_qp(n, m, s));
  }

  std::vector<double> fwd_ms(problems.size(), 0.0);
  std::vector<double> bwd_ms(problems.size(), std::nan(""));
  std::vector<double> iters(problems.size(), 0.0);
  std::vector<int> solved(problems.size(), 0);

  parallel_for(
      problems.size(),
      [&](std::size_t i) {
        using Clock = std::chrono::steady_clock;
        const auto t0 = Clock::now();
        const SolveResult r = solve(problems[i], settings);
        const auto t1 = Clock::now();
        fwd_ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
        iters[i] = static_cast<double>(r.iterations);
        if (r.status == Status::solved) {
          solved[i] = 1;
          const Vec grad_x = Vec::Ones(problems[i].n());
          const auto t2 = Clock::now();
          (void)backward(r, problems[i], grad_x);
          const auto t3 = Clock::now();
          bwd_ms[i] = std::chrono::duration<double, std::milli>(t3 - t2).count();
        }
      },
      threads);

  std::vector<double> bwd_solved;
  for (double v : bwd_ms)
    if (!std::isnan(v)) bwd_solved.push_back(v);

  BenchRow row;
  row.family = to_string(family);
  row.n = n;
  row.m = m;
  row.tol = to_string(tol);
  row.median_fwd_ms = detail::median_of(fwd_ms);
  row.p95_fwd_ms = detail::p95_of(fwd_ms);
  row.median_bwd_ms = detail::median_of(bwd_solved);
  row.iters_median = detail::median_of(iters);
  row.solved_frac =
      trials > 0
          ? static_cast<double>(std::count(solved.begin(), solved.end(), 1)) / trials
          : 0.0;
  return row;
}

inline std::vector<BenchRow> run_bench(const BenchConfig& config) {
  std::vector<BenchRow> rows;
  for (Index n : config.n_values)
    rows.push_back(run_bench_cell(config.family, n, config.m_ratio, config.tol, config.trials,
                                  config.seed, config.threads));
  return rows;
}

inline std::string bench_row_to_csv(const BenchRow& r) {
  std::ostringstream os;
  os << r.family << ',' << r.n << ',' << r.m << ',' << r.tol << ',' << r.median_fwd_ms << ','
     << r.p95_fwd_ms << ',' << r.median_bwd_ms << ',' << r.iters_median << ',' << r.solved_frac;
  return os.str();
}

/// Appends rows to the CSV at path, writing the header only when the file
/// does not yet exist or is empty, so repeated runs accumulate.
inline void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
  namespace fs = std::filesystem;
  const bool need_header = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw ScqpError("cannot open '" + path + "' for writing");
  if (need_header) out << bench_csv_header() << '\n';
  for (const auto& r : rows) out << bench_row_to_csv(r) << '\n';
}

}  // namespace scqp
