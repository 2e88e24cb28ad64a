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

#include "scqp/batch.hpp"
#include "scqp/bench.hpp"
#include "scqp/diff.hpp"
#include "scqp/learn.hpp"
#include "scqp/oracle.hpp"
#include "scqp/problem.hpp"
#include "scqp/scaling.hpp"
#include "scqp/solver.hpp"
#include "scqp/types.hpp"
