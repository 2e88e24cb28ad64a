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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdint>
#include <random>

#include <scqp/scqp.hpp>

using namespace scqp;

namespace {

Settings tight_settings() {
  Settings s;
  s.eps_abs = 1e-9;
  s.eps_rel = 0.0;
  s.max_iters = 1000000;
  return s;
}

// Scalar loss g'x*(theta) evaluated by re-solving, for finite differencing.
double loss_at(const QpProblem& prob, const Vec& g, const Settings& s) {
  SolveResult r = solve(prob, s);
  REQUIRE(r.status == Status::solved);
  return g.dot(r.x);
}

// A solution is strictly complementary when every row is decisively active
// (multiplier above `margin`, slack pinned to its bound) or decisively
// inactive (zero multiplier, slack a `margin` away from both bounds).
// Finite differences of the solution map are only trustworthy there: the
// active set cannot flip under the probe perturbation.
bool strictly_complementary(const QpProblem& prob, const SolveResult& r, double margin) {
  bool any_active = false;
  for (Index j = 0; j < prob.m(); ++j) {
    const double yj = r.y[j];
    if (std::abs(yj) > margin) {
      any_active = true;
      const double bound = yj > 0.0 ? prob.u[j] : prob.l[j];
      if (!std::isfinite(bound) || std::abs(r.z[j] - bound) > 1e-7) return false;
    } else if (std::abs(yj) > 1e-9) {
      return false;
    } else {
      if (r.z[j] - prob.l[j] < margin || prob.u[j] - r.z[j] < margin) return false;
    }
  }
  return any_active;
}

// Bound-constrained instance whose minimizer is strictly inside the box:
// random positive definite Q with a small linear term against wide bounds.
QpProblem interior_box(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Mat B(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) B(i, j) = unit(rng);
  QpProblem prob;
  prob.Q = B * B.transpose() + Mat::Identity(n, n);
  prob.p = Vec(n);
  for (Index i = 0; i < n; ++i) prob.p[i] = 0.5 * unit(rng);
  prob.A = Mat::Identity(n, n);
  prob.l = Vec::Constant(n, -5.0);
  prob.u = Vec::Constant(n, 5.0);
  return prob;
}

// One coordinate pushed against its upper bound: minimizer of the
// unconstrained problem is (1.5, 0, 0), the box caps it at x0 = 1 with
// multiplier y0 = 0.5.
QpProblem active_upper_fixture() {
  QpProblem prob;
  prob.Q = Mat::Identity(3, 3);
  prob.p = Vec(3);
  prob.p << -1.5, 0.0, 0.0;
  prob.A = Mat::Identity(3, 3);
  prob.l = Vec::Constant(3, -5.0);
  prob.u = Vec(3);
  prob.u << 1.0, 5.0, 5.0;
  return prob;
}

}  // namespace

TEST_CASE("iteration map is stationary at a converged solution") {
  Settings s;
  s.eps_abs = 1e-8;
  s.eps_rel = 0.0;
  s.max_iters = 1000000;
  for (const QpProblem& prob :
       {generate_random_box_qp(6, 3), generate_random_qp(8, 12, 1), generate_random_qp(5, 10, 7)}) {
    SolveResult r = solve(prob, s);
    REQUIRE(r.status == Status::solved);
    FixedPointData fp = make_fixed_point_data(prob, r);
    const Vec f1 = fixed_point_map(r.v_star, prob, fp.rho_final, fp.M);
    CHECK(inf_norm(f1 - r.v_star) <= 1e-6);
    const Vec f2 = fixed_point_map(f1, prob, fp.rho_final, fp.M);
    CHECK(inf_norm(f2 - r.v_star) <= 2e-6);
  }
}

TEST_CASE("iteration map on an unconstrained encoding reproduces the closed-form minimizer") {
  QpProblem prob;
  prob.Q = Mat::Identity(1, 1);
  prob.p = Vec::Constant(1, 1.0);
  prob.A = Mat::Identity(1, 1);
  prob.l = Vec::Constant(1, -kInf);
  prob.u = Vec::Constant(1, kInf);

  // Never clipped, so F(v) = A M^{-1}(-p + rho A'v) and the unique fixed
  // point is v = x = -Q^{-1}p = -1.
  const double rho = 0.8;
  Vec v = Vec::Constant(1, -1.0);
  CHECK(fixed_point_map(v, prob, rho)[0] == Catch::Approx(-1.0).margin(1e-14));
  v[0] = 0.3;
  const double expected = (-1.0 + rho * 0.3) / (1.0 + rho);
  CHECK(fixed_point_map(v, prob, rho)[0] == Catch::Approx(expected).margin(1e-14));

  SolveResult r = solve(prob, tight_settings());
  REQUIRE(r.status == Status::solved);
  CHECK(r.x[0] == Catch::Approx(-1.0).margin(1e-8));
}

TEST_CASE("projection derivative is one strictly inside and zero on a touched bound") {
  Vec l(3), u(3), v(3);
  l << -1.0, -1.0, -1.0;
  u << 1.0, 1.0, 1.0;
  v << 0.0, -0.5, 0.9;
  Vec mask = projection_jacobian(v, l, u);
  CHECK(mask[0] == 1.0);
  CHECK(mask[1] == 1.0);
  CHECK(mask[2] == 1.0);

  // Exact boundary ties count as clipped.
  v << 1.0, -1.0, 1.5;
  mask = projection_jacobian(v, l, u);
  CHECK(mask[0] == 0.0);
  CHECK(mask[1] == 0.0);
  CHECK(mask[2] == 0.0);
}

TEST_CASE("projection derivative is all ones under infinite bounds") {
  Vec l = Vec::Constant(4, -kInf);
  Vec u = Vec::Constant(4, kInf);
  Vec v(4);
  v << -1e9, 0.0, 42.0, 1e9;
  CHECK(projection_jacobian(v, l, u).minCoeff() == 1.0);
}

TEST_CASE("adjoint direction reduces to the negated scaled gradient when nothing clips") {
  // With A = I and an interior solution the implicit system collapses to
  // d_x = -Q^{-1} grad_x.
  QpProblem prob;
  prob.Q = Mat::Zero(2, 2);
  prob.Q(0, 0) = 1.0;
  prob.Q(1, 1) = 4.0;
  prob.p = Vec(2);
  prob.p << 0.1, -0.2;
  prob.A = Mat::Identity(2, 2);
  prob.l = Vec::Constant(2, -kInf);
  prob.u = Vec::Constant(2, kInf);

  SolveResult r = solve(prob, tight_settings());
  REQUIRE(r.status == Status::solved);
  FixedPointData fp = make_fixed_point_data(prob, r);
  Vec g(2);
  g << 1.0, 1.0;
  const Vec d_x = compute_dx(fp, prob, g);
  CHECK(d_x[0] == Catch::Approx(-1.0).margin(1e-9));
  CHECK(d_x[1] == Catch::Approx(-0.25).margin(1e-9));
}

TEST_CASE("zero upstream gradient produces a zero adjoint direction") {
  QpProblem prob = generate_random_qp(6, 9, 4);
  SolveResult r = solve(prob, tight_settings());
  REQUIRE(r.status == Status::solved);
  FixedPointData fp = make_fixed_point_data(prob, r);
  const Vec d_x = compute_dx(fp, prob, Vec::Zero(6));
  CHECK(inf_norm(d_x) == 0.0);
}

TEST_CASE("linear-term gradient matches central finite differences") {
  const Vec g = (Vec(5) << 1.0, -0.7, 0.4, 0.9, -0.3).finished();
  const Settings s = tight_settings();
  const double h = 1e-5;

  // Fix the instance by scanning for a strictly complementary solution so
  // the finite-difference probes cannot flip the active set.
  bool tested = false;
  for (std::uint64_t seed = 0; seed < 50 && !tested; ++seed) {
    QpProblem prob = generate_random_box_qp(5, seed);
    SolveResult r = solve(prob, s);
    if (r.status != Status::solved || !strictly_complementary(prob, r, 1e-2)) continue;
    tested = true;

    GradientBundle b = backward(r, prob, g);
    for (Index i = 0; i < 5; ++i) {
      QpProblem plus = prob;
      QpProblem minus = prob;
      plus.p[i] += h;
      minus.p[i] -= h;
      const double fd = (loss_at(plus, g, s) - loss_at(minus, g, s)) / (2.0 * h);
      if (std::abs(fd) <= 1e-6) continue;
      CHECK(std::abs(b.dp[i] - fd) / std::abs(fd) <= 1e-3);
    }
  }
  REQUIRE(tested);
}

TEST_CASE("zero adjoint direction zeroes the objective gradients") {
  const Vec x = (Vec(3) << 1.0, -2.0, 0.5).finished();
  ObjectiveGrads g = grad_objective(Vec::Zero(3), x);
  CHECK(max_abs(g.dQ) == 0.0);
  CHECK(inf_norm(g.dp) == 0.0);
}

TEST_CASE("quadratic-term gradient is symmetric by construction") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    Vec d_x(4), x(4);
    for (Index i = 0; i < 4; ++i) {
      d_x[i] = unit(rng);
      x[i] = unit(rng);
    }
    ObjectiveGrads g = grad_objective(d_x, x);
    CHECK(max_abs(Mat(g.dQ - g.dQ.transpose())) == 0.0);
  }
}

TEST_CASE("quadratic-term gradient matches symmetric entrywise differences") {
  QpProblem prob = interior_box(4, 17);
  const Vec g = (Vec(4) << 0.8, -0.5, 1.2, 0.3).finished();
  const Settings s = tight_settings();
  const double h = 1e-5;

  SolveResult r = solve(prob, s);
  REQUIRE(r.status == Status::solved);
  // Strictly interior: every multiplier is numerically zero.
  REQUIRE(inf_norm(r.y) < 1e-9);

  GradientBundle b = backward(r, prob, g);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = i; j < 4; ++j) {
      // Symmetric perturbation of the (i,j)/(j,i) pair; the matching
      // analytic directional derivative is dQ_ii on the diagonal and
      // dQ_ij + dQ_ji off it.
      QpProblem plus = prob;
      QpProblem minus = prob;
      plus.Q(i, j) += h;
      minus.Q(i, j) -= h;
      if (i != j) {
        plus.Q(j, i) += h;
        minus.Q(j, i) -= h;
      }
      const double fd = (loss_at(plus, g, s) - loss_at(minus, g, s)) / (2.0 * h);
      const double an = i == j ? b.dQ(i, i) : b.dQ(i, j) + b.dQ(j, i);
      if (std::abs(fd) <= 1e-6) continue;
      CHECK(std::abs(an - fd) / std::abs(fd) <= 1e-3);
    }
  }
}

TEST_CASE("interior solutions carry no bound gradients") {
  QpProblem prob = interior_box(4, 23);
  SolveResult r = solve(prob, tight_settings());
  REQUIRE(r.status == Status::solved);
  REQUIRE(inf_norm(r.y) < 1e-9);
  GradientBundle b = backward(r, prob, (Vec(4) << 1.0, 1.0, 1.0, 1.0).finished());
  CHECK(inf_norm(b.dl) == 0.0);
  CHECK(inf_norm(b.du) == 0.0);
}

TEST_CASE("zero upstream gradient zeroes the constraint gradients") {
  QpProblem prob = generate_random_qp(6, 9, 4);
  SolveResult r = solve(prob, tight_settings());
  REQUIRE(r.status == Status::solved);
  GradientBundle b = backward(r, prob, Vec::Zero(6));
  CHECK(max_abs(b.dA) == 0.0);
  CHECK(inf_norm(b.dl) == 0.0);
  CHECK(inf_norm(b.du) == 0.0);
  CHECK(inf_norm(b.d_y) == 0.0);
}

TEST_CASE("upper-bound gradient on a strongly active row matches central differences") {
  QpProblem prob = active_upper_fixture();
  const Vec g = (Vec(3) << 1.0, 0.3, -0.2).finished();
  const Settings s = tight_settings();
  const double h = 1e-5;

  SolveResult r = solve(prob, s);
  REQUIRE(r.status == Status::solved);
  CHECK(r.x[0] == Catch::Approx(1.0).margin(1e-7));
  CHECK(r.y[0] == Catch::Approx(0.5).margin(1e-7));

  GradientBundle b = backward(r, prob, g);
  QpProblem plus = prob;
  QpProblem minus = prob;
  plus.u[0] += h;
  minus.u[0] -= h;
  const double fd = (loss_at(plus, g, s) - loss_at(minus, g, s)) / (2.0 * h);
  REQUIRE(std::abs(fd) > 1e-6);
  CHECK(std::abs(b.du[0] - fd) / std::abs(fd) <= 5e-2);

  // The capped coordinate tracks its bound one-for-one, so the loss moves
  // by exactly the upstream weight on it.
  CHECK(fd == Catch::Approx(g[0]).margin(1e-4));
  // Inactive rows contribute nothing.
  CHECK(b.du[1] == 0.0);
  CHECK(b.du[2] == 0.0);
  CHECK(inf_norm(b.dl) == 0.0);
}

TEST_CASE("bound gradients appear only on rows with a matching multiplier sign") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    QpProblem prob = generate_random_qp(6, 9, seed);
    SolveResult r = solve(prob, tight_settings());
    REQUIRE(r.status == Status::solved);
    Vec g = Vec::Constant(6, 1.0);
    GradientBundle b = backward(r, prob, g);
    for (Index j = 0; j < prob.m(); ++j) {
      if (b.dl[j] != 0.0) CHECK(r.y[j] < 0.0);
      if (b.du[j] != 0.0) CHECK(r.y[j] > 0.0);
    }
  }
}

TEST_CASE("bundled backward equals the three stages composed") {
  QpProblem prob = generate_random_qp(6, 9, 2);
  SolveResult r = solve(prob, tight_settings());
  REQUIRE(r.status == Status::solved);
  const Vec g = (Vec(6) << 0.3, -1.0, 0.2, 0.8, -0.4, 0.6).finished();

  GradientBundle b = backward(r, prob, g);
  FixedPointData fp = make_fixed_point_data(prob, r);
  bool approximate = false;
  const Vec d_x = compute_dx(fp, prob, g, &approximate);
  ObjectiveGrads obj = grad_objective(d_x, r.x);
  ConstraintGrads con = grad_constraints(d_x, g, r, prob);

  CHECK(inf_norm(b.d_x - d_x) == 0.0);
  CHECK(max_abs(Mat(b.dQ - obj.dQ)) == 0.0);
  CHECK(inf_norm(b.dp - obj.dp) == 0.0);
  CHECK(max_abs(Mat(b.dA - con.dA)) == 0.0);
  CHECK(inf_norm(b.dl - con.dl) == 0.0);
  CHECK(inf_norm(b.du - con.du) == 0.0);
  CHECK(inf_norm(b.d_y - con.d_y) == 0.0);
  CHECK(inf_norm(b.d_y_minus - con.d_y_minus) == 0.0);
  CHECK(inf_norm(b.d_y_plus - con.d_y_plus) == 0.0);
  CHECK(b.approximate == approximate);
}

TEST_CASE("backward is homogeneous in the upstream gradient") {
  QpProblem prob = generate_random_qp(6, 9, 5);
  SolveResult r = solve(prob, tight_settings());
  REQUIRE(r.status == Status::solved);
  const Vec g = (Vec(6) << 0.3, -1.0, 0.2, 0.8, -0.4, 0.6).finished();

  // Doubling only shifts exponents, so every field doubles bit-exactly.
  GradientBundle b1 = backward(r, prob, g);
  GradientBundle b2 = backward(r, prob, Vec(2.0 * g));
  CHECK(inf_norm(b2.d_x - 2.0 * b1.d_x) == 0.0);
  CHECK(max_abs(Mat(b2.dQ - 2.0 * b1.dQ)) == 0.0);
  CHECK(inf_norm(b2.dp - 2.0 * b1.dp) == 0.0);
  CHECK(max_abs(Mat(b2.dA - 2.0 * b1.dA)) == 0.0);
  CHECK(inf_norm(b2.dl - 2.0 * b1.dl) == 0.0);
  CHECK(inf_norm(b2.du - 2.0 * b1.du) == 0.0);
  CHECK(inf_norm(b2.d_y - 2.0 * b1.d_y) == 0.0);
}

TEST_CASE("backward refuses results that are not solved") {
  QpProblem prob = generate_random_qp(6, 9, 0);
  Settings s;
  s.max_iters = 2;
  s.check_solved = 1;
  s.check_feasible = 1;
  SolveResult r = solve(prob, s);
  REQUIRE(r.status == Status::max_iters_reached);
  CHECK_THROWS_AS(backward(r, prob, Vec::Zero(6)), NotSolvedError);

  // Infeasibility certificates have no gradients either.
  QpProblem bad;
  bad.Q = Mat::Identity(1, 1);
  bad.p = Vec::Zero(1);
  bad.A = Mat::Ones(2, 1);
  bad.l = (Vec(2) << 1.0, -kInf).finished();
  bad.u = (Vec(2) << kInf, -1.0).finished();
  SolveResult rb = solve(bad);
  REQUIRE(rb.status == Status::primal_infeasible);
  CHECK_THROWS_AS(backward(rb, bad, Vec::Zero(1)), NotSolvedError);
}

TEST_CASE("problems without constraint rows route the gradient through the quadratic term") {
  QpProblem prob;
  prob.Q = Mat::Zero(2, 2);
  prob.Q(0, 0) = 2.0;
  prob.Q(1, 1) = 5.0;
  prob.p = (Vec(2) << 1.0, -2.0).finished();
  prob.A = Mat::Zero(0, 2);
  prob.l = Vec(0);
  prob.u = Vec(0);

  SolveResult r = solve(prob, tight_settings());
  REQUIRE(r.status == Status::solved);
  CHECK(r.x[0] == Catch::Approx(-0.5).margin(1e-9));
  CHECK(r.x[1] == Catch::Approx(0.4).margin(1e-9));

  Vec g = Vec::Ones(2);
  GradientBundle b = backward(r, prob, g);
  CHECK(b.d_x[0] == Catch::Approx(-0.5).margin(1e-10));
  CHECK(b.d_x[1] == Catch::Approx(-0.2).margin(1e-10));
  CHECK(b.dA.rows() == 0);
  CHECK(b.dA.cols() == 2);
  CHECK(b.dl.size() == 0);
  CHECK(b.du.size() == 0);
  CHECK(b.dp.size() == 2);
  CHECK(b.dQ.rows() == 2);
}

TEST_CASE("well-conditioned instances avoid the least-squares fallback") {
  for (const QpProblem& prob : {generate_random_box_qp(6, 0), generate_random_qp(6, 9, 0)}) {
    SolveResult r = solve(prob, tight_settings());
    REQUIRE(r.status == Status::solved);
    GradientBundle b = backward(r, prob, Vec::Ones(prob.n()));
    CHECK_FALSE(b.approximate);
  }
}
