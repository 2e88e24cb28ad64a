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

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scqp/bench.hpp"
#include "scqp/json_io.hpp"
#include "scqp/learn.hpp"
#include "scqp/scqp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;      // I/O, parse, validation
constexpr int kExitInfeasible = 2; // or gradients requested on an unsolved problem
constexpr int kExitMaxIters = 3;

void emit(const std::string& text, const std::string& output_path) {
  if (output_path.empty() || output_path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(output_path);
  if (!out) throw scqp::ScqpError("cannot open '" + output_path + "' for writing");
  out << text << '\n';
}

struct SolveFlags {
  std::optional<double> eps_abs, eps_rel, rho, alpha, sigma;
  std::optional<int> max_iters;
  bool no_scale = false;

  void apply(scqp::Settings& s) const {
    if (eps_abs) s.eps_abs = *eps_abs;
    if (eps_rel) s.eps_rel = *eps_rel;
    if (max_iters) s.max_iters = *max_iters;
    if (rho) s.rho = *rho;
    if (alpha) s.alpha = *alpha;
    if (sigma) s.sigma = *sigma;
    if (no_scale) s.scale = false;
  }
};

void add_solve_flags(CLI::App* cmd, SolveFlags& flags) {
  cmd->add_option("--eps-abs", flags.eps_abs, "absolute stopping tolerance");
  cmd->add_option("--eps-rel", flags.eps_rel, "relative stopping tolerance");
  cmd->add_option("--max-iters", flags.max_iters, "iteration limit");
  cmd->add_option("--rho", flags.rho, "fixed initial step size (default: automatic)");
  cmd->add_option("--alpha", flags.alpha, "relaxation parameter in (0, 2)");
  cmd->add_option("--sigma", flags.sigma, "Tikhonov shift for semi-definite objectives");
  cmd->add_flag("--no-scale", flags.no_scale, "disable automatic equilibration");
}

int status_to_exit(scqp::Status status) {
  switch (status) {
    case scqp::Status::solved: return kExitOk;
    case scqp::Status::primal_infeasible:
    case scqp::Status::dual_infeasible: return kExitInfeasible;
    case scqp::Status::max_iters_reached: return kExitMaxIters;
  }
  return kExitError;
}

int cmd_solve(const std::string& input, const SolveFlags& flags, const std::string& output) {
  scqp::ProblemFileData data = scqp::read_problem_file(input);
  flags.apply(data.settings);

  const auto t0 = std::chrono::steady_clock::now();
  const scqp::SolveResult result = scqp::solve(data.problem, data.settings);
  const auto t1 = std::chrono::steady_clock::now();
  const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  emit(scqp::result_to_json(result, ms).dump(2), output);
  return status_to_exit(result.status);
}

int cmd_grad(const std::string& input, const SolveFlags& flags, const std::string& output) {
  scqp::ProblemFileData data = scqp::read_problem_file(input);
  flags.apply(data.settings);
  if (!data.grad_x) throw scqp::ScqpError("grad requires a 'grad_x' array in the problem file");
  if (data.grad_x->size() != data.problem.n())
    throw scqp::DimensionError("'grad_x' must have length n");

  const scqp::SolveResult result = scqp::solve(data.problem, data.settings);
  if (result.status != scqp::Status::solved) {
    scqp::Json payload;
    payload["status"] = scqp::to_string(result.status);
    emit(payload.dump(2), output);
    return kExitInfeasible;
  }
  const scqp::GradientBundle g =
      scqp::backward(result, data.problem, *data.grad_x, data.settings.sigma);
  scqp::Json payload = scqp::gradients_to_json(g);
  payload["status"] = scqp::to_string(result.status);
  emit(payload.dump(2), output);
  return kExitOk;
}

int cmd_bench(const scqp::BenchConfig& config, const std::string& csv_path) {
  const std::vector<scqp::BenchRow> rows = scqp::run_bench(config);
  if (csv_path.empty()) {
    std::cout << scqp::bench_csv_header() << '\n';
    for (const auto& row : rows) std::cout << scqp::bench_row_to_csv(row) << '\n';
  } else {
    scqp::write_bench_csv(csv_path, rows);
  }
  return kExitOk;
}

int cmd_learn_demo(const scqp::LearnConfig& config, const std::string& output) {
  const scqp::LearnResult result = scqp::run_learn_demo(config);
  std::ostringstream os;
  os << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
    os << e << ',' << result.epoch_loss[e] << '\n';
  const std::string text = os.str();
  if (output.empty() || output == "-")
    std::cout << text;
  else {
    std::ofstream out(output);
    if (!out) throw scqp::ScqpError("cannot open '" + output + "' for writing");
    out << text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scqp: a differentiable splitting solver for convex quadratic programs"};
  app.require_subcommand(1);

  // solve
  std::string solve_input, solve_output;
  SolveFlags solve_flags;
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve a problem file and emit the result");
  solve_cmd->add_option("input", solve_input, "problem JSON file")->required();
  add_solve_flags(solve_cmd, solve_flags);
  solve_cmd->add_option("--output", solve_output, "result path (default: stdout)");

  // grad
  std::string grad_input, grad_output;
  SolveFlags grad_flags;
  CLI::App* grad_cmd =
      app.add_subcommand("grad", "solve, then emit loss gradients for the file's grad_x");
  grad_cmd->add_option("input", grad_input, "problem JSON file with a grad_x array")->required();
  add_solve_flags(grad_cmd, grad_flags);
  grad_cmd->add_option("--output", grad_output, "result path (default: stdout)");

  // bench
  scqp::BenchConfig bench_config;
  std::string bench_family = "box", bench_tol = "low", bench_csv;
  std::vector<long long> bench_n;
  long long bench_seed = 0;
  CLI::App* bench_cmd = app.add_subcommand("bench", "time seeded solve/backward batches");
  bench_cmd->add_option("--family", bench_family, "problem family")
      ->check(CLI::IsMember({"box", "general"}));
  bench_cmd->add_option("--n", bench_n, "problem sizes (comma separated)")->delimiter(',');
  bench_cmd->add_option("--m-ratio", bench_config.m_ratio, "m = ratio * n for the general family")
      ->check(CLI::IsMember({1, 2, 5}));
  bench_cmd->add_option("--tol", bench_tol, "stopping tolerance preset: low=1e-3, high=1e-5")
      ->check(CLI::IsMember({"low", "high"}));
  bench_cmd->add_option("--trials", bench_config.trials, "problems per configuration");
  bench_cmd->add_option("--batch", bench_config.threads,
                        "parallel map workers (default: all cores)");
  bench_cmd->add_option("--seed", bench_seed, "base seed");
  bench_cmd->add_option("--csv", bench_csv, "append rows to this CSV (default: stdout)");

  // learn-demo
  scqp::LearnConfig learn_config;
  long long learn_n = 20, learn_m = 20, learn_seed = 0;
  std::string learn_output;
  CLI::App* learn_cmd = app.add_subcommand(
      "learn-demo", "learn a linear cost model by gradient descent through the solver");
  learn_cmd->add_option("--n", learn_n, "decision variables");
  learn_cmd->add_option("--m", learn_m, "constraints");
  learn_cmd->add_option("--epochs", learn_config.epochs, "training epochs");
  learn_cmd->add_option("--batch", learn_config.batch, "training sample count");
  learn_cmd->add_option("--lr", learn_config.lr, "gradient-descent step size");
  learn_cmd->add_option("--seed", learn_seed, "base seed");
  learn_cmd->add_option("--output", learn_output, "loss-curve CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "scqp: " << e.what() << '\n';
    return kExitError;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(solve_input, solve_flags, solve_output);
    if (grad_cmd->parsed()) return cmd_grad(grad_input, grad_flags, grad_output);
    if (bench_cmd->parsed()) {
      bench_config.family =
          bench_family == "box" ? scqp::BenchFamily::box : scqp::BenchFamily::general;
      bench_config.tol = bench_tol == "low" ? scqp::BenchTol::low : scqp::BenchTol::high;
      if (!bench_n.empty()) {
        bench_config.n_values.clear();
        for (long long n : bench_n) bench_config.n_values.push_back(static_cast<scqp::Index>(n));
      }
      bench_config.seed = static_cast<std::uint64_t>(bench_seed);
      return cmd_bench(bench_config, bench_csv);
    }
    if (learn_cmd->parsed()) {
      learn_config.n = static_cast<scqp::Index>(learn_n);
      learn_config.m = static_cast<scqp::Index>(learn_m);
      learn_config.seed = static_cast<std::uint64_t>(learn_seed);
      return cmd_learn_demo(learn_config, learn_output);
    }
  } catch (const std::exception& e) {
    std::cerr << "scqp: error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
