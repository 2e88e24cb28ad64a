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

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace scqp {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class for all scqp errors.
struct ScqpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Problem fields have inconsistent dimensions.
struct DimensionError : ScqpError {
  using ScqpError::ScqpError;
};

/// Some lower bound exceeds the matching upper bound, or a bound is
/// infinite on the wrong side (l_i = +inf or u_i = -inf).
struct BoundOrderError : ScqpError {
  using ScqpError::ScqpError;
};

/// NaN anywhere in the problem data, or +-inf in Q, p or A.
struct NonFiniteEntryError : ScqpError {
  using ScqpError::ScqpError;
};

/// Control parameters violate their documented ranges.
struct InvalidSettingsError : ScqpError {
  using ScqpError::ScqpError;
};

/// Symmetric factorization failed even after the regularized retry.
struct FactorizationError : ScqpError {
  using ScqpError::ScqpError;
};

/// An ADMM iterate became NaN/inf; the solve was aborted.
struct NonFiniteIterateError : ScqpError {
  using ScqpError::ScqpError;
};

/// Backward pass requested on a result whose status is not solved.
struct NotSolvedError : ScqpError {
  using ScqpError::ScqpError;
};

/// Brute-force oracle: no active-set candidate is feasible.
struct OracleInfeasibleError : ScqpError {
  using ScqpError::ScqpError;
};

/// Brute-force oracle: constraint count exceeds the enumeration cap.
struct OracleTooLargeError : ScqpError {
  using ScqpError::ScqpError;
};

/// Finite-difference oracle: a perturbed problem failed to solve.
struct PerturbationInfeasibleError : ScqpError {
  using ScqpError::ScqpError;
};

inline double inf_norm(const Vec& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

/// Largest entry magnitude (not the operator norm); 0 for empty matrices.
inline double max_abs(const Mat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace scqp
