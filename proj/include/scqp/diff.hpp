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
#include "scqp/solver.hpp"
#include "scqp/types.hpp"

namespace scqp {

/// Multipliers weaker than this are treated as inactive when dividing by
/// y+/y- in the bound gradients; keeps weakly active constraints from
/// producing blow-ups.
inline constexpr double kDualActiveTol = 1e-8;

/// Ridge added to A'A when it is numerically rank deficient, keeping the
/// least-squares step of the backward pass total.
inline constexpr double kGramRidge = 1e-10;

/// Loss gradients with respect to every piece of problem data, plus the
/// intermediate adjoints they are assembled from. dQ is symmetric by
/// construction; dl/du vanish on rows whose bound is not strongly active.
/// `approximate` is set when the implicit system was singular and had to be
/// solved in the least-squares sense.
struct GradientBundle {
  Mat dQ;
  Vec dp;
  Mat dA;
  Vec dl;
  Vec du;
  Vec d_x;
  Vec d_y;
  Vec d_y_minus;
  Vec d_y_plus;
  bool approximate = false;
};

/// 0/1 diagonal of the projection derivative: 1 where v is strictly inside
/// the box, 0 where it is clipped. Exact boundary ties count as clipped
/// (the clamp is non-differentiable there; zero matches the active-set
/// reading of the solution).
inline Vec projection_jacobian(const Vec& v, const Vec& l, const Vec& u) {
  Vec mask(v.size());
  for (Index i = 0; i < v.size(); ++i) mask[i] = (l[i] < v[i] && v[i] < u[i]) ? 1.0 : 0.0;
  return mask;
}

/// Everything the backward pass needs from a finished solve, in
/// original-space coordinates: the fixed point v*, the projection mask at
/// v*, the final step size, and a factorization of M = Q + sigma I + rho A'A
/// built on the original data (the forward factorization lives in the
/// equilibrated space and cannot be reused directly).
struct FixedPointData {
  Vec v_star;
  Vec proj_mask;
  double rho_final = 1.0;
  LinearSolver M;
};

inline FixedPointData make_fixed_point_data(const QpProblem& problem, const SolveResult& solution,
                                            double sigma = 0.0) {
  FixedPointData fp;
  fp.v_star = solution.v_star;
  fp.proj_mask = projection_jacobian(solution.v_star, problem.l, problem.u);
  fp.rho_final = solution.rho_final;
  fp.M.compute(problem.Q, problem.A, solution.rho_final, sigma);
  return fp;
}

/// One application of the iteration map expressed in the auxiliary variable:
///   F(v) = A M^{-1}(-p + rho A'(2 Pi(v) - v)) + v - Pi(v).
/// Its fixed points v* satisfy x* = M^{-1}(-p + rho A'(2 Pi(v*) - v*)) with
/// z* = Pi(v*) and y* = rho (v* - Pi(v*)).
inline Vec fixed_point_map(const Vec& v, const QpProblem& problem, double rho,
                           const LinearSolver& M) {
  const Vec pv = project(v, problem.l, problem.u);
  const Vec x = M.solve(-problem.p + rho * (problem.A.transpose() * (2.0 * pv - v)));
  return problem.A * x + v - pv;
}

/// Convenience overload that factors M = Q + sigma I + rho A'A on the spot.
inline Vec fixed_point_map(const Vec& v, const QpProblem& problem, double rho,
                           double sigma = 0.0) {
  LinearSolver M;
  M.compute(problem.Q, problem.A, rho, sigma);
  return fixed_point_map(v, problem, rho, M);
}

/// Adjoint of the solution map: solves [I - dF/dv]' s = w for the upstream
/// gradient routed through v, then maps it back to x-space. With
/// D = diag(mask),
///   dF/dv = rho A M^{-1} A'(2D - I) + I - D,
///   w     = D A (A'A)^{-1} grad_x,
///   d_x   = -M^{-1} A' s.
/// A singular implicit system falls back to a least-squares solve and
/// reports `approximate`.
inline Vec compute_dx(const FixedPointData& fp, const QpProblem& problem, const Vec& grad_x,
                      bool* approximate = nullptr) {
  if (approximate != nullptr) *approximate = false;
  const Index n = problem.n();
  const Index m = problem.m();
  if (grad_x.size() != n) throw DimensionError("grad_x must have length n");
  if (m == 0) {
    // no auxiliary variable: x* = M^{-1}(-p) directly
    return Vec(-fp.M.solve(grad_x));
  }

  const Mat At = problem.A.transpose();
  const Mat Minv_At = fp.M.solve_matrix(At);                // n x m
  const Mat G = fp.rho_final * (problem.A * Minv_At);       // rho A M^{-1} A'
  const Vec& mask = fp.proj_mask;

  // J = I - dF/dv = D - G (2D - I)
  Mat two_d_minus_i = -Mat::Identity(m, m);
  two_d_minus_i.diagonal() += 2.0 * mask;
  Mat J = -G * two_d_minus_i;
  J.diagonal() += mask;

  Mat gram = At * problem.A;  // A'A, n x n
  Eigen::LDLT<Mat> gram_ldlt(gram);
  Vec t;
  if (gram_ldlt.info() == Eigen::Success && gram_ldlt.isPositive() &&
      gram_ldlt.vectorD().minCoeff() > 1e-12 * gram_ldlt.vectorD().cwiseAbs().maxCoeff()) {
    t = gram_ldlt.solve(grad_x);
  } else {
    gram.diagonal().array() += kGramRidge;
    t = Eigen::LDLT<Mat>(gram).solve(grad_x);
  }
  const Vec w = mask.cwiseProduct(problem.A * t);

  Eigen::FullPivLU<Mat> lu(J.transpose());
  Vec s;
  if (lu.isInvertible()) {
    s = lu.solve(w);
  } else {
    s = Eigen::CompleteOrthogonalDecomposition<Mat>(J.transpose()).solve(w);
    if (approximate != nullptr) *approximate = true;
  }
  return Vec(-fp.M.solve(At * s));
}

/// dQ = (d_x x*' + x* d_x')/2 (symmetric), dp = d_x.
struct ObjectiveGrads {
  Mat dQ;
  Vec dp;
};

inline ObjectiveGrads grad_objective(const Vec& d_x, const Vec& x_star) {
  ObjectiveGrads g;
  g.dQ = 0.5 * (d_x * x_star.transpose() + x_star * d_x.transpose());
  g.dp = d_x;
  return g;
}

/// Constraint-data gradients recovered from the stationarity condition:
/// d_y is the minimum-norm solution of A' d_y = -grad_x - Q d_x, and the
/// bound gradients divide it by the matching multiplier part wherever that
/// part is decisively nonzero. The bound gradients carry a leading minus:
/// differentiating the complementarity rows y- (Ax - l) = 0 and
/// y+ (Ax - u) = 0 puts -diag(y-) dl and -diag(y+) du on the adjoint's
/// right-hand side, so dl = -y- d_y- and du = -y+ d_y+ (each reducing to
/// -d_y on its strongly active rows). Central differences confirm the sign.
struct ConstraintGrads {
  Mat dA;
  Vec dl;
  Vec du;
  Vec d_y;
  Vec d_y_minus;
  Vec d_y_plus;
};

inline ConstraintGrads grad_constraints(const Vec& d_x, const Vec& grad_x,
                                        const SolveResult& solution, const QpProblem& problem) {
  const Index m = problem.m();
  ConstraintGrads g;
  g.d_y = Vec::Zero(m);
  g.d_y_minus = Vec::Zero(m);
  g.d_y_plus = Vec::Zero(m);
  g.dl = Vec::Zero(m);
  g.du = Vec::Zero(m);
  if (m > 0) {
    const Vec rhs = -grad_x - problem.Q * d_x;
    g.d_y = Eigen::CompleteOrthogonalDecomposition<Mat>(problem.A.transpose()).solve(rhs);
    for (Index j = 0; j < m; ++j) {
      const double y_minus = std::min(solution.y[j], 0.0);
      const double y_plus = std::max(solution.y[j], 0.0);
      if (y_minus < -kDualActiveTol) {
        g.d_y_minus[j] = g.d_y[j] / y_minus;
        g.dl[j] = -y_minus * g.d_y_minus[j];
      }
      if (y_plus > kDualActiveTol) {
        g.d_y_plus[j] = g.d_y[j] / y_plus;
        g.du[j] = -y_plus * g.d_y_plus[j];
      }
    }
  }
  g.dA = g.d_y * solution.x.transpose() + solution.y * d_x.transpose();
  return g;
}

/// Full backward pass. Defined only for solved problems; infeasibility
/// certificates have no gradients.
inline GradientBundle backward(const SolveResult& solution, const QpProblem& problem,
                               const Vec& grad_x, double sigma = 0.0) {
  if (solution.status != Status::solved)
    throw NotSolvedError(std::string("backward requires a solved problem; status = ") +
                         to_string(solution.status));
  const FixedPointData fp = make_fixed_point_data(problem, solution, sigma);
  GradientBundle g;
  g.d_x = compute_dx(fp, problem, grad_x, &g.approximate);
  ObjectiveGrads obj = grad_objective(g.d_x, solution.x);
  g.dQ = std::move(obj.dQ);
  g.dp = std::move(obj.dp);
  ConstraintGrads con = grad_constraints(g.d_x, grad_x, solution, problem);
  g.dA = std::move(con.dA);
  g.dl = std::move(con.dl);
  g.du = std::move(con.du);
  g.d_y = std::move(con.d_y);
  g.d_y_minus = std::move(con.d_y_minus);
  g.d_y_plus = std::move(con.d_y_plus);
  return g;
}

}  // namespace scqp
