// Copyright 2026 The TaskDrop Authors.
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

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "taskdrop/tape.hpp"

namespace taskdrop {

/// Builds a scalar loss on the given tape from one Var per parameter tensor.
using LossBuilder = std::function<Var(Tape&, std::span<const Var> params)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  Index worst_entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Compares tape gradients of `loss` against central differences with step h over every
/// coordinate of every parameter. The error of one coordinate is
/// |analytic - numeric| / max(1, |analytic|).
GradCheckResult finite_difference_check(const LossBuilder& loss, std::vector<Tensor> params,
                                        double h = 1e-5);

/// Tape gradients of `loss` at params, one tensor per parameter.
std::vector<Tensor> tape_gradients(const LossBuilder& loss, std::span<const Tensor> params);

}  // namespace taskdrop
