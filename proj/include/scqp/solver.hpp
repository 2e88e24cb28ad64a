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
#include <string>

#include "scqp/problem.hpp"
#include "scqp/scaling.hpp"
#include "scqp/types.hpp"

namespace scqp {

enum class Status { solved, max_iters_reached, primal_infeasible, dual_infeasible };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::solved: return "solved";
    case Status::max_iters_reached: return "max_iters_reached";
    case Status::primal_infeasible: return "primal_infeasible";
    case Status::dual_infeasible: return "dual_infeasible";
  }
  return "unknown";
}

/// Cached symmetric factorization of M = Q + sigma I + rho A'A. M is
/// positive definite whenever Q is PD, or Q is PSD and A has full row rank
/// (augment_full_rank guarantees the latter). A numerical breakdown is
/// retried once with a 1e-8 diagonal shift before giving up.
class LinearSolver {
 public:
  LinearSolver() = default;

  void compute(const Mat& Q, const Mat& A, double rho, double sigma) {
    compute_with_gram(Q, A.transpose() * A, rho, sigma);
  }

  /// Same as compute() with A'A precomputed, so refactorizations after a
  /// step-size change skip the O(m n^2) product.
  void compute_with_gram(const Mat& Q, const Mat& AtA, double rho, double sigma) {
    Mat M = Q + rho * AtA;
    if (sigma > 0.0) M.diagonal().array() += sigma;
    ldlt_.compute(M);
    if (!healthy()) {
      M.diagonal().array() += 1e-8;
      ldlt_.compute(M);
      if (!healthy())
        throw FactorizationError(
            "factorization of Q + sigma I + rho A'A failed after regularized retry; "
            "matrix is not positive definite");
    }
  }

  Vec solve(const Vec& b) const { return ldlt_.solve(b); }

  Mat solve_matrix(const Mat& B) const { return ldlt_.solve(B); }

 private:
  bool healthy() const {
    if (ldlt_.info() != Eigen::Success) return false;
    const Vec d = ldlt_.vectorD();
    if (d.size() == 0) return true;
    const double dmax = d.cwiseAbs().maxCoeff();
    const double dmin = d.minCoeff();
    return dmin > 0.0 && dmin >= 1e-13 * dmax;
  }

  Eigen::LDLT<Mat> ldlt_;
};

/// Elementwise clamp of v into [l, u].
inline Vec project(const Vec& v, const Vec& l, const Vec& u) {
  return v.cwiseMax(l).cwiseMin(u);
}

/// Relaxed closed-form primal update
///   x+ = alpha_eff M^{-1}(-p + rho A'(z - mu)) + (1 - alpha_eff) x.
inline Vec x_update(const LinearSolver& M, const Vec& x, const Vec& z, const Vec& mu,
                    const Vec& p, const Mat& A, double rho, double alpha_eff) {
  const Vec rhs = -p + rho * (A.transpose() * (z - mu));
  return alpha_eff * M.solve(rhs) + (1.0 - alpha_eff) * x;
}

/// r_prim = Ax - z, r_dual = Qx + p + A'y, on original-space quantities.
inline void residuals(const QpProblem& problem, const Vec& x, const Vec& z, const Vec& y,
                      Vec& r_prim, Vec& r_dual) {
  r_prim = problem.A * x - z;
  r_dual = problem.Q * x + problem.p + problem.A.transpose() * y;
}

struct TerminationCheck {
  bool solved = false;
  double eps_prim = 0.0;
  double eps_dual = 0.0;
  double r_prim = 0.0;
  double r_dual = 0.0;
};

namespace detail {

/// Tolerance/thresholding core shared by the public check and the solve
/// loop, which has the matrix-vector products already in hand.
inline TerminationCheck termination_from_products(const Vec& r_prim, const Vec& r_dual,
                                                  const Vec& Ax, const Vec& z, const Vec& Qx,
                                                  const Vec& Aty, const Vec& p,
                                                  const Settings& settings) {
  TerminationCheck t;
  t.eps_prim = settings.eps_abs + settings.eps_rel * std::max(inf_norm(Ax), inf_norm(z));
  t.eps_dual = settings.eps_abs +
               settings.eps_rel * std::max({inf_norm(Qx), inf_norm(Aty), inf_norm(p)});
  t.r_prim = inf_norm(r_prim);
  t.r_dual = inf_norm(r_dual);
  t.solved = t.r_prim <= t.eps_prim && t.r_dual <= t.eps_dual;
  return t;
}

}  // namespace detail

/// eps_prim = eps_abs + eps_rel max(|Ax|, |z|),
/// eps_dual = eps_abs + eps_rel max(|Qx|, |A'y|, |p|), all inf-norms of
/// original-space quantities; solved iff both residual norms pass.
inline TerminationCheck check_termination(const Vec& r_prim, const Vec& r_dual,
                                          const QpProblem& problem, const Vec& x, const Vec& z,
                                          const Vec& y, const Settings& settings) {
  return detail::termination_from_products(r_prim, r_dual, problem.A * x, z, problem.Q * x,
                                           problem.A.transpose() * y, problem.p, settings);
}

/// Certificate test on a dual direction dy = y^k - y^{k-1}: A'dy vanishes
/// and the box support function u'(dy)+ + l'(dy)- is nonpositive, both to
/// tolerance eps * |dy|. A bound at infinity contributes +inf to the support
/// unless its matching part of dy is zero, in which case it contributes
/// nothing; an infinite support can never certify.
inline bool check_primal_infeasible(const Vec& dy, const Mat& A, const Vec& l, const Vec& u,
                                    double eps) {
  const double dy_norm = inf_norm(dy);
  if (!(dy_norm > 0.0)) return false;
  const double thresh = eps * dy_norm;
  if (inf_norm(A.transpose() * dy) > thresh) return false;
  double support = 0.0;
  for (Index i = 0; i < dy.size(); ++i) {
    if (dy[i] > 0.0) {
      if (u[i] == kInf) return false;
      support += u[i] * dy[i];
    } else if (dy[i] < 0.0) {
      if (l[i] == -kInf) return false;
      support += l[i] * dy[i];
    }
  }
  return support <= thresh;
}

/// Certificate test on a primal direction dx = x^k - x^{k-1}: Q dx vanishes
/// to tolerance, the objective strictly descends along dx (p'dx at most
/// -eps |dx|; a tolerance-sized change in either direction certifies
/// nothing), and A dx stays inside the recession cone of the box: pinned to
/// ~0 when both bounds are finite, bounded on one side when only one is,
/// unrestricted when the row is free.
inline bool check_dual_infeasible(const Vec& dx, const Mat& Q, const Vec& p, const Mat& A,
                                  const Vec& l, const Vec& u, double eps) {
  const double dx_norm = inf_norm(dx);
  if (!(dx_norm > 0.0)) return false;
  const double thresh = eps * dx_norm;
  if (inf_norm(Q * dx) > thresh) return false;
  if (p.dot(dx) > -thresh) return false;
  const Vec Adx = A * dx;
  for (Index i = 0; i < Adx.size(); ++i) {
    const bool l_finite = l[i] > -kInf;
    const bool u_finite = u[i] < kInf;
    if (l_finite && u_finite) {
      if (std::abs(Adx[i]) > thresh) return false;
    } else if (l_finite) {
      if (Adx[i] < -thresh) return false;
    } else if (u_finite) {
      if (Adx[i] > thresh) return false;
    }
  }
  return true;
}

/// Final iterates and diagnostics of a solve. For infeasible statuses the
/// iterates are the certificate direction's generators, not a solution.
struct SolveResult {
  Status status = Status::max_iters_reached;
  Vec x;
  Vec z;
  Vec y;
  int iterations = 0;
  double r_prim = 0.0;
  double r_dual = 0.0;
  int refactor_count = 0;
  Vec v_star;           ///< fixed point A x* + y*/rho retained for backward
  double rho_final = 0.0;
  ScalingData scaling;
};

/// Optional starting iterates in original-space coordinates.
struct InitialIterates {
  Vec x;
  Vec y;
};

namespace detail {

/// Shared body of the two infeasibility-check call sites in solve(). Returns
/// true when a persistent certificate fixed the status.
inline bool infeasibility_step(const Vec& prev_xu, const Vec& prev_yu, const Vec& xu,
                               const Vec& yu, const QpProblem& problem, const Settings& settings,
                               int& prim_hits, int& dual_hits, Status& status) {
  const Vec dy = yu - prev_yu;
  const Vec dx = xu - prev_xu;
  prim_hits = check_primal_infeasible(dy, problem.A, problem.l, problem.u, settings.eps_infeas)
                  ? prim_hits + 1
                  : 0;
  dual_hits = check_dual_infeasible(dx, problem.Q, problem.p, problem.A, problem.l, problem.u,
                                    settings.eps_infeas)
                  ? dual_hits + 1
                  : 0;
  if (prim_hits >= 2) {
    status = Status::primal_infeasible;
    return true;
  }
  if (dual_hits >= 2) {
    status = Status::dual_infeasible;
    return true;
  }
  return false;
}

}  // namespace detail

/// Runs the operator-splitting loop: equilibrate, pick the step size,
/// factorize once, then iterate with termination checks every check_solved
/// iterations and infeasibility checks every check_feasible iterations
/// (certificates must persist across two consecutive checks). All
/// termination and certificate tests use original-space quantities.
inline SolveResult solve(const QpProblem& problem_in, const Settings& settings = {},
                         const InitialIterates* warm = nullptr) {
  validate_settings(settings);
  const QpProblem problem = validate(problem_in);
  const Index n = problem.n();
  const Index m = problem.m();

  ScalingData scaling = ScalingData::identity(n, m);
  if (settings.scale) {
    const double beta = settings.beta ? *settings.beta : auto_beta(problem.Q);
    scaling = compute_scaling(problem.Q, problem.A, beta);
  }
  const QpProblem sp = settings.scale ? scale_problem(problem, scaling) : problem;

  RhoState rho_state;
  rho_state.rho = settings.rho ? *settings.rho
                               : initial_rho(sp.Q, sp.A, settings.rho_min, settings.rho_max);

  const Mat AtA = sp.A.transpose() * sp.A;
  LinearSolver factor;
  factor.compute_with_gram(sp.Q, AtA, rho_state.rho, settings.sigma);
  rho_state.refactor_count = 1;

  Vec x = Vec::Zero(n);
  Vec mu = Vec::Zero(m);
  Vec z = project(Vec::Zero(m), sp.l, sp.u);
  if (warm != nullptr) {
    if (warm->x.size() != n || warm->y.size() != m)
      throw DimensionError("initial iterates must have sizes n and m");
    x = warm->x.cwiseQuotient(scaling.D);
    mu = warm->y.cwiseQuotient(scaling.E) / rho_state.rho;
    z = project(sp.A * x + mu, sp.l, sp.u);
  }

  auto unscale_x = [&](const Vec& xs) { return Vec(scaling.D.cwiseProduct(xs)); };
  auto unscale_z = [&](const Vec& zs) { return Vec(zs.cwiseQuotient(scaling.E)); };
  auto unscale_y = [&](const Vec& mus) {
    return Vec(rho_state.rho * scaling.E.cwiseProduct(mus));
  };

  Vec prev_xu = unscale_x(x);
  Vec prev_yu = unscale_y(mu);
  int prim_hits = 0;
  int dual_hits = 0;
  int iter = 0;
  Status status = Status::max_iters_reached;

  while (iter < settings.max_iters) {
    prev_xu = unscale_x(x);
    prev_yu = unscale_y(mu);

    const double alpha_eff = iter < settings.alpha_iter ? 1.0 : settings.alpha;
    x = x_update(factor, x, z, mu, sp.p, sp.A, rho_state.rho, alpha_eff);
    const Vec Ax_s = sp.A * x;
    z = project(Ax_s + mu, sp.l, sp.u);
    mu += Ax_s - z;
    ++iter;

    if (!x.allFinite() || !z.allFinite() || !mu.allFinite())
      throw NonFiniteIterateError("iterates diverged to non-finite values at iteration " +
                                  std::to_string(iter));

    const bool at_solved = iter % settings.check_solved == 0;
    const bool at_feasible = iter % settings.check_feasible == 0;
    if (!at_solved && !at_feasible) continue;

    const Vec xu = unscale_x(x);
    const Vec zu = unscale_z(z);
    const Vec yu = unscale_y(mu);

    if (at_solved) {
      const Vec Ax = problem.A * xu;
      const Vec Qx = problem.Q * xu;
      const Vec Aty = problem.A.transpose() * yu;
      const Vec r_prim = Ax - zu;
      const Vec r_dual = Qx + problem.p + Aty;
      const TerminationCheck t = detail::termination_from_products(r_prim, r_dual, Ax, zu, Qx,
                                                                   Aty, problem.p, settings);
      if (t.solved) {
        status = Status::solved;
        break;
      }
      if (at_feasible && detail::infeasibility_step(prev_xu, prev_yu, xu, yu, problem, settings,
                                                    prim_hits, dual_hits, status))
        break;
      if (settings.adaptive_rho && iter >= settings.adaptive_rho_iter &&
          iter <= settings.adaptive_rho_max_iter) {
        const double rho_old = rho_state.rho;
        const double prim_ref = std::max(inf_norm(Ax), inf_norm(zu));
        const double dual_ref = std::max({inf_norm(Qx), inf_norm(Aty), inf_norm(problem.p)});
        if (adaptive_rho_update(rho_state, t.r_prim, t.r_dual, prim_ref, dual_ref, settings)) {
          mu *= rho_old / rho_state.rho;  // keeps y = rho mu invariant
          factor.compute_with_gram(sp.Q, AtA, rho_state.rho, settings.sigma);
          ++rho_state.refactor_count;
          rho_state.last_update_iter = iter;
        }
      }
    } else {
      // feasibility-only boundary
      if (detail::infeasibility_step(prev_xu, prev_yu, xu, yu, problem, settings, prim_hits,
                                     dual_hits, status))
        break;
    }
  }

  SolveResult result;
  result.x = unscale_x(x);
  result.z = unscale_z(z);
  result.y = unscale_y(mu);
  result.iterations = iter;
  result.refactor_count = rho_state.refactor_count;
  result.rho_final = rho_state.rho;
  result.scaling = scaling;

  Vec r_prim_vec, r_dual_vec;
  residuals(problem, result.x, result.z, result.y, r_prim_vec, r_dual_vec);
  result.r_prim = inf_norm(r_prim_vec);
  result.r_dual = inf_norm(r_dual_vec);
  if (status == Status::max_iters_reached) {
    // the loop may exhaust max_iters between scheduled checks
    const TerminationCheck t = check_termination(r_prim_vec, r_dual_vec, problem, result.x,
                                                 result.z, result.y, settings);
    if (t.solved) status = Status::solved;
  }
  result.status = status;

  // The fixed point of the original-space iteration map at (x*, y*); the
  // scaled-space v does not map back through the diagonal scalings, so it is
  // rebuilt from the recovered iterates.
  result.v_star = problem.A * result.x + result.y / rho_state.rho;
  return result;
}

}  // namespace scqp
