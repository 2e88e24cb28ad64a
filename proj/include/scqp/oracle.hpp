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

// Ground-truth solvers and numerical-differentiation helpers for the test
// suite. Nothing here is used by the production solve or backward paths.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "scqp/problem.hpp"
#include "scqp/solver.hpp"
#include "scqp/types.hpp"

namespace scqp {

/// Exact solution found by exhaustive active-set enumeration.
struct OracleSolution {
  Vec x;
  Vec y;
  std::vector<Index> active_lower;
  std::vector<Index> active_upper;
  double objective = 0.0;
  int skipped_singular = 0;  ///< candidate systems dropped as singular
};

/// KKT diagnostics at an arbitrary point, with z taken as Ax.
struct KktResidual {
  Vec stationarity;       ///< Qx + p + A'y
  double comp_lower = 0;  ///< |sum over finite l of y_-, (Ax - l)|
  double comp_upper = 0;  ///< |sum over finite u of y_+, (Ax - u)|
  double feas_violation = 0;
};

inline KktResidual kkt_residual(const QpProblem& problem, const Vec& x, const Vec& y) {
  KktResidual r;
  const Vec Ax = problem.A * x;
  r.stationarity = problem.Q * x + problem.p + problem.A.transpose() * y;
  double cl = 0.0, cu = 0.0, viol = 0.0;
  for (Index i = 0; i < problem.m(); ++i) {
    const double y_minus = std::min(y[i], 0.0);
    const double y_plus = std::max(y[i], 0.0);
    if (problem.l[i] > -kInf) {
      cl += y_minus * (Ax[i] - problem.l[i]);
      viol = std::max(viol, problem.l[i] - Ax[i]);
    }
    if (problem.u[i] < kInf) {
      cu += y_plus * (Ax[i] - problem.u[i]);
      viol = std::max(viol, Ax[i] - problem.u[i]);
    }
  }
  r.comp_lower = std::abs(cl);
  r.comp_upper = std::abs(cu);
  r.feas_violation = std::max(viol, 0.0);
  return r;
}

/// Exhaustively tries every assignment of constraints to
/// {inactive, at-lower, at-upper} (3^m candidates), solves the
/// equality-constrained stationarity system for each, filters by primal
/// feasibility and multiplier signs (y <= 0 on lower-active rows, y >= 0 on
/// upper-active rows), and returns the feasible candidate with the lowest
/// objective. Requires positive definite Q so every candidate system is
/// square and generically solvable; singular candidates are skipped.
inline OracleSolution solve_active_set_bruteforce(const QpProblem& problem_in) {
  const QpProblem problem = validate(problem_in);
  const Index n = problem.n();
  const Index m = problem.m();
  if (m > 16)
    throw OracleTooLargeError("active-set enumeration supports at most 16 constraints, got " +
                              std::to_string(m));

  constexpr double kFeasTol = 1e-9;
  constexpr double kSignTol = 1e-10;

  bool found = false;
  OracleSolution best;
  int skipped = 0;

  std::vector<int> state(static_cast<std::size_t>(m), 0);  // 0 inactive, 1 lower, 2 upper
  std::uint64_t total = 1;
  for (Index i = 0; i < m; ++i) total *= 3;

  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t c = code;
    bool viable = true;
    for (Index i = 0; i < m; ++i) {
      state[static_cast<std::size_t>(i)] = static_cast<int>(c % 3);
      c /= 3;
      if (state[static_cast<std::size_t>(i)] == 1 && problem.l[i] == -kInf) viable = false;
      if (state[static_cast<std::size_t>(i)] == 2 && problem.u[i] == kInf) viable = false;
    }
    if (!viable) continue;

    std::vector<Index> active;
    for (Index i = 0; i < m; ++i)
      if (state[static_cast<std::size_t>(i)] != 0) active.push_back(i);
    const Index k = static_cast<Index>(active.size());

    //   [ Q    A_act' ] [x]      [-p   ]
    //   [ A_act  0    ] [y_act] = [b_act]
    Mat kkt = Mat::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = problem.Q;
    Vec rhs(n + k);
    rhs.head(n) = -problem.p;
    for (Index a = 0; a < k; ++a) {
      const Index row = active[static_cast<std::size_t>(a)];
      kkt.block(n + a, 0, 1, n) = problem.A.row(row);
      kkt.block(0, n + a, n, 1) = problem.A.row(row).transpose();
      rhs[n + a] =
          state[static_cast<std::size_t>(row)] == 1 ? problem.l[row] : problem.u[row];
    }

    Eigen::FullPivLU<Mat> lu(kkt);
    if (!lu.isInvertible()) {
      ++skipped;
      continue;
    }
    const Vec sol = lu.solve(rhs);
    const Vec x = sol.head(n);

    Vec y = Vec::Zero(m);
    bool signs_ok = true;
    for (Index a = 0; a < k; ++a) {
      const Index row = active[static_cast<std::size_t>(a)];
      y[row] = sol[n + a];
      if (state[static_cast<std::size_t>(row)] == 1 && y[row] > kSignTol) signs_ok = false;
      if (state[static_cast<std::size_t>(row)] == 2 && y[row] < -kSignTol) signs_ok = false;
    }
    if (!signs_ok) continue;

    const Vec Ax = problem.A * x;
    bool feasible = true;
    for (Index i = 0; i < m; ++i) {
      if (Ax[i] < problem.l[i] - kFeasTol || Ax[i] > problem.u[i] + kFeasTol) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;

    const double obj = problem.objective(x);
    if (!found || obj < best.objective) {
      found = true;
      best.x = x;
      best.y = y;
      best.objective = obj;
      best.active_lower.clear();
      best.active_upper.clear();
      for (Index i = 0; i < m; ++i) {
        if (state[static_cast<std::size_t>(i)] == 1) best.active_lower.push_back(i);
        if (state[static_cast<std::size_t>(i)] == 2) best.active_upper.push_back(i);
      }
    }
  }

  if (!found)
    throw OracleInfeasibleError("no active-set candidate is feasible; problem has no solution");
  best.skipped_singular = skipped;
  return best;
}

/// Fixed quadratic test loss l(x) = 0.5 |x - x_target|^2.
struct QuadraticLoss {
  Vec x_target;
  double operator()(const Vec& x) const { return 0.5 * (x - x_target).squaredNorm(); }
  Vec grad(const Vec& x) const { return x - x_target; }
};

/// Names one scalar entry of the problem data for perturbation.
struct ParamSelector {
  enum class Kind { q_entry, p_entry, a_entry, l_entry, u_entry };
  Kind kind = Kind::p_entry;
  Index i = 0;
  Index j = 0;  // column, for matrix entries

  static ParamSelector q(Index i, Index j) { return {Kind::q_entry, i, j}; }
  static ParamSelector p(Index i) { return {Kind::p_entry, i, 0}; }
  static ParamSelector a(Index i, Index j) { return {Kind::a_entry, i, j}; }
  static ParamSelector l(Index i) { return {Kind::l_entry, i, 0}; }
  static ParamSelector u(Index i) { return {Kind::u_entry, i, 0}; }
};

namespace detail {

inline QpProblem perturb(const QpProblem& problem, const ParamSelector& sel, double delta) {
  QpProblem out = problem;
  switch (sel.kind) {
    case ParamSelector::Kind::q_entry:
      // keep Q symmetric: split the step across the mirrored pair (the
      // diagonal receives both halves)
      out.Q(sel.i, sel.j) += 0.5 * delta;
      out.Q(sel.j, sel.i) += 0.5 * delta;
      break;
    case ParamSelector::Kind::p_entry:
      out.p[sel.i] += delta;
      break;
    case ParamSelector::Kind::a_entry:
      out.A(sel.i, sel.j) += delta;
      break;
    case ParamSelector::Kind::l_entry:
      out.l[sel.i] += delta;
      break;
    case ParamSelector::Kind::u_entry:
      out.u[sel.i] += delta;
      break;
  }
  return out;
}

}  // namespace detail

/// Central difference (l(x*(th + h)) - l(x*(th - h))) / 2h for the selected
/// entry, re-solving the problem at both perturbed points. The solve
/// tolerance must be far below h^2 for the quotient to be meaningful.
inline double finite_diff_grad(const QpProblem& problem, const QuadraticLoss& loss,
                               const ParamSelector& sel, double h, const Settings& settings) {
  auto value_at = [&](double delta) {
    const QpProblem perturbed = detail::perturb(problem, sel, delta);
    const SolveResult r = solve(perturbed, settings);
    if (r.status != Status::solved)
      throw PerturbationInfeasibleError(std::string("perturbed problem not solved: ") +
                                        to_string(r.status));
    return loss(r.x);
  };
  return (value_at(h) - value_at(-h)) / (2.0 * h);
}

}  // namespace scqp
