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

#include "taskdrop/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "taskdrop/error.hpp"

namespace taskdrop {

namespace {

double evaluate(const LossBuilder& loss, std::span<const Tensor> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.constant(p));
  return loss(tape, vars).value().item();
}

}  // namespace

std::vector<Tensor> tape_gradients(const LossBuilder& loss, std::span<const Tensor> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Tensor& p : params) vars.push_back(tape.variable(p));
  tape.backward(loss(tape, vars));
  std::vector<Tensor> grads;
  grads.reserve(vars.size());
  for (const Var& v : vars) grads.push_back(v.grad());
  return grads;
}

GradCheckResult finite_difference_check(const LossBuilder& loss, std::vector<Tensor> params,
                                        double h) {
  if (!(h > 0.0)) throw DomainError("finite difference step must be positive");
  const std::vector<Tensor> analytic = tape_gradients(loss, params);
  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Index i = 0; i < params[p].size(); ++i) {
      const double saved = params[p][i];
      params[p][i] = saved + h;
      const double up = evaluate(loss, params);
      params[p][i] = saved - h;
      const double down = evaluate(loss, params);
      params[p][i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p][i];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      ++result.coordinates;
      if (err >= result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_param = p;
        result.worst_entry = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace taskdrop
