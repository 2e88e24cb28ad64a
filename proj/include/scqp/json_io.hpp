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

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scqp/diff.hpp"
#include "scqp/problem.hpp"
#include "scqp/solver.hpp"
#include "scqp/types.hpp"

namespace scqp {

using Json = nlohmann::json;

/// Parsed problem document: the program data, any settings overrides, and an
/// optional upstream gradient for the backward pass.
struct ProblemFileData {
  QpProblem problem;
  Settings settings;
  std::optional<Vec> grad_x;
};

namespace detail {

inline Vec json_to_vec(const Json& j, const std::string& name) {
  if (!j.is_array()) throw ScqpError("'" + name + "' must be an array");
  Vec v(static_cast<Index>(j.size()));
  Index i = 0;
  for (const auto& e : j) {
    if (!e.is_number()) throw ScqpError("'" + name + "' must contain numbers only");
    v[i++] = e.get<double>();
  }
  return v;
}

/// Bounds arrays accept null entries: null means -inf in "l" and +inf in "u".
inline Vec json_to_bound(const Json& j, const std::string& name, double inf_value) {
  if (!j.is_array()) throw ScqpError("'" + name + "' must be an array");
  Vec v(static_cast<Index>(j.size()));
  Index i = 0;
  for (const auto& e : j) {
    if (e.is_null())
      v[i++] = inf_value;
    else if (e.is_number())
      v[i++] = e.get<double>();
    else
      throw ScqpError("'" + name + "' entries must be numbers or null");
  }
  return v;
}

inline Mat json_to_mat(const Json& j, const std::string& name, Index cols_hint) {
  if (!j.is_array()) throw ScqpError("'" + name + "' must be an array of row arrays");
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Mat(0, cols_hint);
  Index cols = -1;
  Mat m;
  Index r = 0;
  for (const auto& row : j) {
    if (!row.is_array()) throw ScqpError("'" + name + "' rows must be arrays");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Index>(row.size()) != cols) {
      throw ScqpError("'" + name + "' rows have inconsistent lengths");
    }
    Index c = 0;
    for (const auto& e : row) {
      if (!e.is_number()) throw ScqpError("'" + name + "' must contain numbers only");
      m(r, c++) = e.get<double>();
    }
    ++r;
  }
  return m;
}

inline std::vector<double> vec_to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

/// Applies a "settings" JSON object onto defaults. Keys mirror the Settings
/// field names exactly; "rho" and "beta" accept null for automatic
/// selection; any unknown key is an error.
inline Settings settings_from_json(const Json& j) {
  Settings s;
  if (!j.is_object()) throw InvalidSettingsError("'settings' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "max_iters") s.max_iters = value.get<int>();
    else if (key == "eps_abs") s.eps_abs = value.get<double>();
    else if (key == "eps_rel") s.eps_rel = value.get<double>();
    else if (key == "eps_infeas") s.eps_infeas = value.get<double>();
    else if (key == "check_solved") s.check_solved = value.get<int>();
    else if (key == "check_feasible") s.check_feasible = value.get<int>();
    else if (key == "alpha") s.alpha = value.get<double>();
    else if (key == "alpha_iter") s.alpha_iter = value.get<int>();
    else if (key == "rho") s.rho = value.is_null() ? std::nullopt
                                                   : std::optional<double>(value.get<double>());
    else if (key == "rho_min") s.rho_min = value.get<double>();
    else if (key == "rho_max") s.rho_max = value.get<double>();
    else if (key == "adaptive_rho") s.adaptive_rho = value.get<bool>();
    else if (key == "adaptive_rho_tol") s.adaptive_rho_tol = value.get<double>();
    else if (key == "adaptive_rho_iter") s.adaptive_rho_iter = value.get<int>();
    else if (key == "adaptive_rho_max_iter") s.adaptive_rho_max_iter = value.get<int>();
    else if (key == "sigma") s.sigma = value.get<double>();
    else if (key == "scale") s.scale = value.get<bool>();
    else if (key == "beta") s.beta = value.is_null() ? std::nullopt
                                                     : std::optional<double>(value.get<double>());
    else throw InvalidSettingsError("unknown settings key: '" + key + "'");
  }
  return s;
}

inline ProblemFileData problem_from_json(const Json& j) {
  if (!j.is_object()) throw ScqpError("problem document must be a JSON object");
  for (const char* key : {"Q", "p", "A", "l", "u"})
    if (!j.contains(key)) throw ScqpError(std::string("missing required key '") + key + "'");

  ProblemFileData data;
  data.problem.p = detail::json_to_vec(j.at("p"), "p");
  const Index n = data.problem.p.size();
  data.problem.Q = detail::json_to_mat(j.at("Q"), "Q", n);
  data.problem.A = detail::json_to_mat(j.at("A"), "A", n);
  data.problem.l = detail::json_to_bound(j.at("l"), "l", -kInf);
  data.problem.u = detail::json_to_bound(j.at("u"), "u", kInf);
  data.problem = validate(data.problem);
  if (j.contains("settings")) data.settings = settings_from_json(j.at("settings"));
  validate_settings(data.settings);
  if (j.contains("grad_x")) data.grad_x = detail::json_to_vec(j.at("grad_x"), "grad_x");
  return data;
}

inline ProblemFileData read_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScqpError("cannot open '" + path + "'");
  Json j;
  in >> j;  // throws nlohmann::json::parse_error with line context
  return problem_from_json(j);
}

inline Json result_to_json(const SolveResult& result, double solve_time_ms) {
  Json j;
  j["status"] = to_string(result.status);
  j["x"] = detail::vec_to_std(result.x);
  j["y"] = detail::vec_to_std(result.y);
  j["z"] = detail::vec_to_std(result.z);
  j["iterations"] = result.iterations;
  j["r_prim"] = result.r_prim;
  j["r_dual"] = result.r_dual;
  j["rho_final"] = result.rho_final;
  j["refactor_count"] = result.refactor_count;
  j["solve_time_ms"] = solve_time_ms;
  return j;
}

inline Json gradients_to_json(const GradientBundle& g) {
  Json j;
  j["dQ"] = detail::mat_to_json(g.dQ);
  j["dp"] = detail::vec_to_std(g.dp);
  j["dA"] = detail::mat_to_json(g.dA);
  j["dl"] = detail::vec_to_std(g.dl);
  j["du"] = detail::vec_to_std(g.du);
  j["approximate"] = g.approximate;
  return j;
}

/// Serializes a problem, mapping infinite bounds back to null.
inline Json problem_to_json(const QpProblem& problem) {
  Json j;
  j["Q"] = detail::mat_to_json(problem.Q);
  j["p"] = detail::vec_to_std(problem.p);
  j["A"] = detail::mat_to_json(problem.A);
  Json l = Json::array(), u = Json::array();
  for (Index i = 0; i < problem.m(); ++i) {
    if (problem.l[i] == -kInf) l.push_back(nullptr); else l.push_back(problem.l[i]);
    if (problem.u[i] == kInf) u.push_back(nullptr); else u.push_back(problem.u[i]);
  }
  j["l"] = l;
  j["u"] = u;
  return j;
}

}  // namespace scqp
