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

// End-to-end demo: learn the linear cost of a QP by gradient descent
// through the solver. The cost is modeled as p(theta) = theta' w with
// per-sample features w in R^5 and a coefficient matrix theta in R^{5 x n}.
// Targets come from a hidden ground-truth theta*; the training loss is the
// illustrative quadratic tracker 0.5 |x*(p(theta)) - x_target|^2 averaged
// over the sample batch.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "scqp/batch.hpp"
#include "scqp/diff.hpp"
#include "scqp/problem.hpp"
#include "scqp/solver.hpp"

namespace scqp {

struct LearnConfig {
  Index n = 20;
  Index m = 20;
  int epochs = 100;
  int batch = 16;          ///< training sample count
  double lr = 0.03;        ///< gradient-descent step
  std::uint64_t seed = 0;
  bool init_at_truth = false;  ///< start from theta* instead of zero
  unsigned threads = 0;        ///< parallel map workers; 0 = auto
  Settings settings = default_learn_settings();

  // Accurate solves keep the gradients clean; the generous iteration cap
  // covers the occasional near-degenerate sample the trajectory wanders
  // through mid-training.
  static Settings default_learn_settings() {
    Settings s;
    s.eps_abs = 1e-5;
    s.eps_rel = 1e-5;
    s.max_iters = 200000;
    return s;
  }
};

struct LearnResult {
  std::vector<double> epoch_loss;  ///< mean batch loss at the start of each epoch
  Mat theta_star;                  ///< hidden ground truth, 5 x n
  Mat theta;                       ///< learned coefficients, 5 x n
};

/// One fixed QP, a batch of feature vectors, and targets produced by the
/// ground-truth coefficients. Training never sees theta*, only the targets.
inline LearnResult run_learn_demo(const LearnConfig& config) {
  constexpr Index kFeatures = 5;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  QpProblem base = generate_random_qp(config.n, config.m, config.seed);

  Mat theta_star(kFeatures, config.n);
  for (Index i = 0; i < kFeatures; ++i)
    for (Index j = 0; j < config.n; ++j) theta_star(i, j) = normal(rng);

  const std::size_t batch = static_cast<std::size_t>(config.batch);
  std::vector<Vec> features(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    Vec w(kFeatures);
    for (Index i = 0; i < kFeatures; ++i) w[i] = normal(rng);
    features[s] = w;
  }

  std::vector<Vec> targets(batch);
  parallel_for(
      batch,
      [&](std::size_t s) {
        QpProblem sample = base;
        sample.p = theta_star.transpose() * features[s];
        const SolveResult r = solve(sample, config.settings);
        if (r.status != Status::solved)
          throw ScqpError("target generation failed: sample did not solve");
        targets[s] = r.x;
      },
      config.threads);

  Mat theta = config.init_at_truth ? theta_star : Mat::Zero(kFeatures, config.n);

  LearnResult result;
  result.theta_star = theta_star;
  result.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));

  std::vector<double> losses(batch, 0.0);
  std::vector<Mat> grads(batch);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    parallel_for(
        batch,
        [&](std::size_t s) {
          QpProblem sample = base;
          sample.p = theta.transpose() * features[s];
          const SolveResult r = solve(sample, config.settings);
          if (r.status != Status::solved)
            throw ScqpError("training sample did not solve");
          const Vec err = r.x - targets[s];
          losses[s] = 0.5 * err.squaredNorm();
          const GradientBundle g = backward(r, sample, err, config.settings.sigma);
          grads[s] = features[s] * g.dp.transpose();  // chain rule for p = theta' w
        },
        config.threads);

    double mean_loss = 0.0;
    Mat mean_grad = Mat::Zero(kFeatures, config.n);
    for (std::size_t s = 0; s < batch; ++s) {
      mean_loss += losses[s];
      mean_grad += grads[s];
    }
    mean_loss /= static_cast<double>(batch);
    mean_grad /= static_cast<double>(batch);

    result.epoch_loss.push_back(mean_loss);
    theta -= config.lr * mean_grad;
  }

  result.theta = theta;
  return result;
}

}  // namespace scqp
