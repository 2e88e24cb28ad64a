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

#include <cmath>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "scqp/types.hpp"

namespace scqp {

/// Convex quadratic program
///
///   minimize    0.5 x'Qx + p'x
///   subject to  l <= Ax <= u
///
/// with Q symmetric positive semi-definite (n x n), A (m x n), and
/// elementwise bounds where l_i = -inf / u_i = +inf encode one-sided or
/// absent constraints.
struct QpProblem {
  Mat Q;
  Vec p;
  Mat A;
  Vec l;
  Vec u;

  Index n() const { return p.size(); }
  Index m() const { return l.size(); }

  double objective(const Vec& x) const { return 0.5 * x.dot(Q * x) + p.dot(x); }
};

/// Optimization control parameters.
struct Settings {
  int max_iters = 10000;           ///< maximum number of ADMM iterations
  double eps_abs = 1e-3;           ///< absolute stopping tolerance
  double eps_rel = 1e-3;           ///< relative stopping tolerance
  double eps_infeas = 1e-4;        ///< infeasibility stopping tolerance
  int check_solved = 25;           ///< interval for checking termination
  int check_feasible = 25;         ///< interval for checking infeasibility
  double alpha = 1.2;              ///< relaxation parameter, 0 < alpha < 2
  int alpha_iter = 100;            ///< initial non-relaxed iterations
  std::optional<double> rho{};     ///< step size; unset selects it automatically
  double rho_min = 1e-6;           ///< lower bound on rho
  double rho_max = 1e6;            ///< upper bound on rho
  bool adaptive_rho = true;        ///< adaptive rho selection
  double adaptive_rho_tol = 10.0;  ///< threshold for changing rho, > 1
  int adaptive_rho_iter = 50;      ///< initial non-adaptive iterations
  int adaptive_rho_max_iter = 1000;///< last iteration eligible for adaptation
  double sigma = 0.0;              ///< Tikhonov shift for semi-definite Q
  bool scale = true;               ///< automatic equilibration
  std::optional<double> beta{};    ///< scaling shrinkage in [0,1]; unset = auto
};

/// Throws InvalidSettingsError if any parameter is outside its range.
inline void validate_settings(const Settings& s) {
  auto fail = [](const std::string& msg) { throw InvalidSettingsError("settings: " + msg); };
  if (s.max_iters < 1) fail("max_iters must be >= 1");
  if (!(s.eps_abs >= 0) || !(s.eps_rel >= 0)) fail("eps_abs and eps_rel must be nonnegative");
  if (!(s.eps_abs + s.eps_rel > 0)) fail("eps_abs and eps_rel cannot both be zero");
  if (!(s.eps_infeas >= 0)) fail("eps_infeas must be nonnegative");
  if (s.check_solved < 1 || s.check_feasible < 1) fail("check intervals must be >= 1");
  if (!(s.alpha > 0.0 && s.alpha < 2.0)) fail("alpha must lie in (0, 2)");
  if (s.alpha_iter < 0) fail("alpha_iter must be nonnegative");
  if (!(s.rho_min > 0) || !(s.rho_max > 0) || s.rho_min > s.rho_max)
    fail("rho bounds must satisfy 0 < rho_min <= rho_max");
  if (s.rho && !(*s.rho >= s.rho_min && *s.rho <= s.rho_max))
    fail("rho must lie in [rho_min, rho_max]");
  if (!(s.adaptive_rho_tol > 1.0)) fail("adaptive_rho_tol must be > 1");
  if (s.adaptive_rho_iter < 0 || s.adaptive_rho_max_iter < 0)
    fail("adaptive rho iteration bounds must be nonnegative");
  if (!(s.sigma >= 0)) fail("sigma must be nonnegative");
  if (s.beta && !(*s.beta >= 0.0 && *s.beta <= 1.0)) fail("beta must lie in [0, 1]");
}

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace detail

/// Validates dimensions, bound ordering and finiteness, and returns the
/// problem with Q replaced by its symmetric part (Q + Q')/2. Relative
/// asymmetry beyond 1e-6 is repaired but reported on stderr.
inline QpProblem validate(QpProblem problem) {
  const Index n = problem.p.size();
  const Index m = problem.l.size();
  detail::require(problem.Q.rows() == n && problem.Q.cols() == n,
                  "Q must be n x n with n = size(p)");
  detail::require(problem.A.cols() == n, "A must have n columns");
  detail::require(problem.A.rows() == m, "A must have m = size(l) rows");
  detail::require(problem.u.size() == m, "l and u must have equal length");

  if (!problem.Q.allFinite() || !problem.p.allFinite() || !problem.A.allFinite())
    throw NonFiniteEntryError("Q, p and A must be finite");
  if (problem.l.hasNaN() || problem.u.hasNaN())
    throw NonFiniteEntryError("bounds must not contain NaN");

  for (Index i = 0; i < m; ++i) {
    if (problem.l[i] > problem.u[i]) {
      std::ostringstream os;
      os << "bound order violated at row " << i << ": l = " << problem.l[i]
         << " > u = " << problem.u[i];
      throw BoundOrderError(os.str());
    }
    if (problem.l[i] == kInf || problem.u[i] == -kInf)
      throw BoundOrderError("l_i must be < +inf and u_i > -inf");
  }

  const double asym = (problem.Q - problem.Q.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, problem.Q.cwiseAbs().maxCoeff());
  if (asym > 1e-6 * scale)
    std::cerr << "scqp: warning: Q asymmetry " << asym << " exceeds 1e-6 relative; symmetrizing\n";
  if (asym > 0.0) problem.Q = 0.5 * (problem.Q + problem.Q.transpose()).eval();
  return problem;
}

/// Stacks the identity with free bounds under A, so that Q + rho A'A is
/// invertible for any psd Q. The added rows never constrain x.
inline QpProblem augment_full_rank(const QpProblem& problem) {
  const Index n = problem.n();
  const Index m = problem.m();
  QpProblem out;
  out.Q = problem.Q;
  out.p = problem.p;
  out.A.resize(m + n, n);
  out.A.topRows(m) = problem.A;
  out.A.bottomRows(n) = Mat::Identity(n, n);
  out.l.resize(m + n);
  out.l.head(m) = problem.l;
  out.l.tail(n).setConstant(-kInf);
  out.u.resize(m + n);
  out.u.head(m) = problem.u;
  out.u.tail(n).setConstant(kInf);
  return out;
}

namespace detail {

/// L'L + 0.01 I with L dense-Gaussian masked to the given density.
inline Mat random_ridge_gram(Index n, double density, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Mat L(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double value = normal(rng);
      L(i, j) = unif(rng) < density ? value : 0.0;
    }
  return L.transpose() * L + 0.01 * Mat::Identity(n, n);
}

inline Vec random_normal(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline Vec random_uniform(Index n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(lo, hi);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = unif(rng);
  return v;
}

}  // namespace detail

/// Random box-constrained QP: Q = L'L + 0.01 I with 50% dense Gaussian L,
/// p ~ N(0,1), A = I, l ~ U(-2,-1), u ~ U(1,2). Deterministic per seed.
inline QpProblem generate_random_box_qp(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  QpProblem problem;
  problem.Q = detail::random_ridge_gram(n, 0.5, rng);
  problem.p = detail::random_normal(n, rng);
  problem.A = Mat::Identity(n, n);
  problem.l = detail::random_uniform(n, -2.0, -1.0, rng);
  problem.u = detail::random_uniform(n, 1.0, 2.0, rng);
  return problem;
}

/// Random inequality-constrained QP: Q, p as the box family,
/// A is m x n Gaussian at 15% density, l ~ U(-1,0), u ~ U(0,1).
inline QpProblem generate_random_qp(Index n, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  QpProblem problem;
  problem.Q = detail::random_ridge_gram(n, 0.5, rng);
  problem.p = detail::random_normal(n, rng);
  problem.A.resize(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) {
      const double value = normal(rng);
      problem.A(i, j) = unif(rng) < 0.15 ? value : 0.0;
    }
  problem.l = detail::random_uniform(m, -1.0, 0.0, rng);
  problem.u = detail::random_uniform(m, 0.0, 1.0, rng);
  return problem;
}

}  // namespace scqp
