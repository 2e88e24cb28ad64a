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
#include <cstddef>

#include <scqp/scqp.hpp>

using namespace scqp;

TEST_CASE("training from the ground truth starts at numerical zero loss") {
  LearnConfig config;
  config.n = 10;
  config.m = 10;
  config.epochs = 1;
  config.batch = 4;
  config.init_at_truth = true;
  LearnResult result = run_learn_demo(config);
  REQUIRE(result.epoch_loss.size() == 1);
  // Identical coefficients reproduce the targets up to solver tolerance.
  CHECK(result.epoch_loss[0] <= 10.0 * config.settings.eps_abs);
}

TEST_CASE("loss curve has one entry per epoch") {
  LearnConfig config;
  config.n = 8;
  config.m = 8;
  config.epochs = 7;
  config.batch = 3;
  LearnResult result = run_learn_demo(config);
  CHECK(result.epoch_loss.size() == 7);
  CHECK(result.theta.rows() == 5);
  CHECK(result.theta.cols() == 8);
  CHECK(result.theta_star.rows() == 5);
  CHECK(result.theta_star.cols() == 8);
}

TEST_CASE("gradient descent halves the training loss at the default shape") {
  LearnConfig config;
  LearnResult result = run_learn_demo(config);
  REQUIRE(result.epoch_loss.size() == static_cast<std::size_t>(config.epochs));
  CHECK(result.epoch_loss.back() < 0.5 * result.epoch_loss.front());
}

TEST_CASE("training runs are deterministic for a fixed seed") {
  LearnConfig config;
  config.n = 8;
  config.m = 8;
  config.epochs = 5;
  config.batch = 4;
  config.seed = 3;
  LearnResult a = run_learn_demo(config);
  LearnResult b = run_learn_demo(config);
  REQUIRE(a.epoch_loss.size() == b.epoch_loss.size());
  for (std::size_t i = 0; i < a.epoch_loss.size(); ++i)
    CHECK(a.epoch_loss[i] == b.epoch_loss[i]);
  CHECK(max_abs(Mat(a.theta - b.theta)) == 0.0);
  CHECK(max_abs(Mat(a.theta_star - b.theta_star)) == 0.0);
}
