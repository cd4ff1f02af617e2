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

#include "taskdrop/encoder.hpp"

#include <string>

#include "taskdrop/error.hpp"
#include "taskdrop/ops.hpp"

namespace taskdrop {

namespace {

Tensor uniform_tensor(Shape shape, double scale, Rng& rng) {
  Tensor t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = rng.uniform(-scale, scale);
  return t;
}

}  // namespace

GruParams GruParams::uniform_init(Index input_dim, Index hidden_dim, double scale, Rng& rng,
                                  double update_bias) {
  GruParams p;
  p.w_z = uniform_tensor({input_dim, hidden_dim}, scale, rng);
  p.w_r = uniform_tensor({input_dim, hidden_dim}, scale, rng);
  p.w_h = uniform_tensor({input_dim, hidden_dim}, scale, rng);
  p.u_z = uniform_tensor({hidden_dim, hidden_dim}, scale, rng);
  p.u_r = uniform_tensor({hidden_dim, hidden_dim}, scale, rng);
  p.u_h = uniform_tensor({hidden_dim, hidden_dim}, scale, rng);
  p.b_z = Tensor(Shape{hidden_dim}, update_bias);
  p.b_r = Tensor(Shape{hidden_dim});
  p.b_h = Tensor(Shape{hidden_dim});
  return p;
}

std::array<Tensor*, 9> GruParams::blocks() {
  return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h};
}

std::array<const Tensor*, 9> GruParams::blocks() const {
  return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h};
}

void GruParams::validate() const {
  const Index d = input_dim();
  const Index n = hidden_dim();
  const Shape w{d, n};
  const Shape u{n, n};
  const Shape b{n};
  const auto all = blocks();
  for (std::size_t i = 0; i < all.size(); ++i) {
    const Shape& expected = i < 3 ? w : (i < 6 ? u : b);
    if (all[i]->shape() != expected) {
      throw ShapeError("GRU block " + std::string(kBlockNames[i]) + " has shape " +
                       shape_string(all[i]->shape()) + ", expected " + shape_string(expected));
    }
  }
}

GruVars GruVars::bind(Tape& tape, const GruParams& params, bool trainable) {
  params.validate();
  auto bind_one = [&](const Tensor& t) {
    return trainable ? tape.variable(t) : tape.constant(t);
  };
  return GruVars{bind_one(params.w_z), bind_one(params.w_r), bind_one(params.w_h),
                 bind_one(params.u_z), bind_one(params.u_r), bind_one(params.u_h),
                 bind_one(params.b_z), bind_one(params.b_r), bind_one(params.b_h)};
}

Var gru_cell_step(const GruVars& p, Var x, Var h_prev) {
  const Index n = p.u_z.value().dim(0);
  if (x.value().cols() != p.w_z.value().dim(0) || h_prev.value().cols() != n ||
      x.value().rows() != h_prev.value().rows()) {
    throw ShapeError("gru_cell_step: x " + shape_string(x.value().shape()) + ", h " +
                     shape_string(h_prev.value().shape()) + " against W " +
                     shape_string(p.w_z.value().shape()));
  }
  const Var z = sigmoid(add(add(matmul(x, p.w_z), matmul(h_prev, p.u_z)), p.b_z));
  const Var r = sigmoid(add(add(matmul(x, p.w_r), matmul(h_prev, p.u_r)), p.b_r));
  const Var candidate =
      tanh(add(add(matmul(x, p.w_h), matmul(mul(r, h_prev), p.u_h)), p.b_h));
  // (1 - z) * h + z * h~ written as h + z * (h~ - h).
  return add(h_prev, mul(z, sub(candidate, h_prev)));
}

GruOutput encode_sequence(const GruVars& params, std::span<const Var> inputs,
                          const OutputMask& mask) {
  if (inputs.empty()) throw DomainError("encode_sequence needs at least one timestep");
  Tape& tape = *inputs.front().tape();
  const Index batch = inputs.front().value().rows();
  const Index hidden = params.u_z.value().dim(0);

  Var gate;
  if (const auto* factors = std::get_if<Tensor>(&mask)) {
    if (factors->shape() != Shape{batch, hidden}) {
      throw ShapeError("per-sample output mask " + shape_string(factors->shape()) +
                       " does not match [" + std::to_string(batch) + ", " +
                       std::to_string(hidden) + "]");
    }
    gate = tape.constant(*factors);
  }

  GruOutput out;
  out.hidden.reserve(inputs.size());
  out.outputs.reserve(inputs.size());
  Var h = tape.constant(Tensor(Shape{batch, hidden}));
  for (const Var& x : inputs) {
    h = gru_cell_step(params, x, h);
    out.hidden.push_back(h);
    if (const auto* task_mask = std::get_if<BinaryMask>(&mask)) {
      out.outputs.push_back(apply_mask(h, *task_mask));
    } else if (gate.valid()) {
      out.outputs.push_back(mul(h, gate));
    } else {
      out.outputs.push_back(h);
    }
  }
  return out;
}

std::vector<Var> timestep_inputs(Tape& tape, const Tensor& embedded) {
  if (embedded.rank() != 2 && embedded.rank() != 3) {
    throw ShapeError("embedded input must be [n x d] or [b x n x d], got " +
                     shape_string(embedded.shape()));
  }
  const bool batched = embedded.rank() == 3;
  const Index batch = batched ? embedded.dim(0) : 1;
  const Index steps = batched ? embedded.dim(1) : embedded.dim(0);
  const Index width = embedded.cols();
  const auto rows = embedded.matrix();
  std::vector<Var> inputs;
  inputs.reserve(static_cast<std::size_t>(steps));
  for (Index i = 0; i < steps; ++i) {
    Tensor x(Shape{batch, width});
    auto xm = x.matrix();
    for (Index b = 0; b < batch; ++b) xm.row(b) = rows.row(b * steps + i);
    inputs.push_back(tape.constant(std::move(x)));
  }
  return inputs;
}

}  // namespace taskdrop
