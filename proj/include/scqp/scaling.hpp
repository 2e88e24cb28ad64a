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
#include <cmath>

#include "scqp/problem.hpp"
#include "scqp/types.hpp"

namespace scqp {

/// Diagonal equilibration x = D x̄, z = E⁻¹ z̄, y = E ȳ. Entries are always
/// strictly positive and finite; identity when scaling is disabled.
struct ScalingData {
  Vec D;            ///< length n
  Vec E;            ///< length m
  double beta_used = 0.0;

  static ScalingData identity(Index n, Index m) {
    ScalingData s;
    s.D = Vec::Ones(n);
    s.E = Vec::Ones(m);
    return s;
  }
};

/// Step size with factorization bookkeeping. Owned by a single solve.
struct RhoState {
  double rho = 1.0;
  int refactor_count = 0;
  int last_update_iter = 0;
};

/// Cost scaling from inverse square roots of the row inf-norms of Q,
/// shrunk toward their mean by beta; constraint scaling from the row
/// inf-norms of AD. Zero rows carry no scale information: a zero Q row
/// takes the mean factor of the nonzero rows (1 if all rows are zero),
/// and a zero AD row gets e_i = 1.
inline ScalingData compute_scaling(const Mat& Q, const Mat& A, double beta) {
  const Index n = Q.rows();
  const Index m = A.rows();
  ScalingData s;
  s.D.resize(n);
  s.E.resize(m);
  s.beta_used = beta;

  double nonzero_sum = 0.0;
  Index nonzero_count = 0;
  for (Index i = 0; i < n; ++i) {
    const double row = Q.row(i).template lpNorm<Eigen::Infinity>();
    if (row > 0.0) {
      s.D[i] = 1.0 / std::sqrt(row);
      nonzero_sum += s.D[i];
      ++nonzero_count;
    } else {
      s.D[i] = 0.0;  // placeholder, filled below
    }
  }
  const double fill = nonzero_count > 0 ? nonzero_sum / double(nonzero_count) : 1.0;
  for (Index i = 0; i < n; ++i)
    if (s.D[i] == 0.0) s.D[i] = fill;

  const double mean = s.D.mean();
  s.D = (1.0 - beta) * s.D + Vec::Constant(n, beta * mean);

  for (Index i = 0; i < m; ++i) {
    const double row = (A.row(i).transpose().cwiseProduct(s.D)).template lpNorm<Eigen::Infinity>();
    s.E[i] = row > 0.0 ? row : 1.0;
  }
  return s;
}

/// Auto rule for the shrinkage parameter: no shrinkage unless the spread of
/// the per-row factors is extreme.
inline double auto_beta(const Mat& Q) {
  const Index n = Q.rows();
  Vec d(n);
  double nonzero_sum = 0.0;
  Index nonzero_count = 0;
  for (Index i = 0; i < n; ++i) {
    const double row = Q.row(i).template lpNorm<Eigen::Infinity>();
    d[i] = row > 0.0 ? 1.0 / std::sqrt(row) : 0.0;
    if (row > 0.0) {
      nonzero_sum += d[i];
      ++nonzero_count;
    }
  }
  const double fill = nonzero_count > 0 ? nonzero_sum / double(nonzero_count) : 1.0;
  for (Index i = 0; i < n; ++i)
    if (d[i] == 0.0) d[i] = fill;
  if (n == 0) return 0.0;
  const double spread = d.maxCoeff() / d.minCoeff();
  return spread <= 1e3 ? 0.0 : 0.5;
}

/// Applies (Q̄, p̄, Ā, l̄, ū) = (DQD, Dp, EAD, El, Eu). Infinite bounds stay
/// infinite since E is positive.
inline QpProblem scale_problem(const QpProblem& problem, const ScalingData& s) {
  QpProblem out;
  out.Q = s.D.asDiagonal() * problem.Q * s.D.asDiagonal();
  out.p = s.D.cwiseProduct(problem.p);
  out.A = s.E.asDiagonal() * problem.A * s.D.asDiagonal();
  out.l = s.E.cwiseProduct(problem.l);
  out.u = s.E.cwiseProduct(problem.u);
  return out;
}

/// Recovers original-space iterates: x = D x̄, z = E⁻¹ z̄, y = E ȳ.
inline void unscale_solution(Vec& x, Vec& z, Vec& y, const ScalingData& s) {
  x = s.D.cwiseProduct(x).eval();
  z = z.cwiseQuotient(s.E).eval();
  y = s.E.cwiseProduct(y).eval();
}

/// Step-size heuristic sqrt(m/n) ‖Q̄‖_F / ‖ĀᵀĀ‖_F, clamped. An all-zero
/// constraint matrix has no scale to balance; fall back to 1.
inline double initial_rho(const Mat& Qs, const Mat& As, double rho_min, double rho_max) {
  const double denom = (As.transpose() * As).norm();
  double rho0;
  if (denom == 0.0) {
    rho0 = 1.0;
  } else {
    const double ratio = double(As.rows()) / double(std::max<Index>(Qs.rows(), 1));
    rho0 = std::sqrt(ratio) * Qs.norm() / denom;
  }
  return std::clamp(rho0, rho_min, rho_max);
}

/// Rebalances rho by the square root of the ratio of relative primal to
/// relative dual error. The candidate replaces rho only when they differ by
/// a factor of at least adaptive_rho_tol; a zero relative residual on either
/// side means the solve is about to finish, so the update is skipped.
/// Returns true when rho changed (caller must refactorize).
inline bool adaptive_rho_update(RhoState& state, double r_prim, double r_dual,
                                double prim_ref, double dual_ref, const Settings& settings) {
  if (!(prim_ref > 0.0) || !(dual_ref > 0.0)) return false;
  const double rel_prim = r_prim / prim_ref;
  const double rel_dual = r_dual / dual_ref;
  if (!(rel_prim > 0.0) || !(rel_dual > 0.0)) return false;
  if (!std::isfinite(rel_prim) || !std::isfinite(rel_dual)) return false;

  const double candidate =
      std::clamp(state.rho * std::sqrt(rel_prim / rel_dual), settings.rho_min, settings.rho_max);
  if (candidate / state.rho >= settings.adaptive_rho_tol ||
      state.rho / candidate >= settings.adaptive_rho_tol) {
    state.rho = candidate;
    return true;
  }
  return false;
}

}  // namespace scqp
