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

#include <array>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "taskdrop/masking.hpp"
#include "taskdrop/random.hpp"
#include "taskdrop/tape.hpp"

namespace taskdrop {

/// Weights of a single-layer GRU with input width d and hidden width n.
///
///   z  = sigmoid(x W_z + h U_z + b_z)
///   r  = sigmoid(x W_r + h U_r + b_r)
///   h~ = tanh(x W_h + (r * h) U_h + b_h)
///   h' = (1 - z) * h + z * h~
///
/// W_* are d x n, U_* are n x n and b_* have length n. Rows are batch samples.
struct GruParams {
  Tensor w_z, w_r, w_h;
  Tensor u_z, u_r, u_h;
  Tensor b_z, b_r, b_h;

  static constexpr std::array<std::string_view, 9> kBlockNames = {
      "w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h"};

  /// Weights uniform in (-scale, scale); b_z filled with update_bias, other biases zero.
  static GruParams uniform_init(Index input_dim, Index hidden_dim, double scale, Rng& rng,
                                double update_bias = 0.0);

  Index input_dim() const { return w_z.rank() == 2 ? w_z.dim(0) : 0; }
  Index hidden_dim() const { return w_z.rank() == 2 ? w_z.dim(1) : 0; }

  std::array<Tensor*, 9> blocks();
  std::array<const Tensor*, 9> blocks() const;

  /// Throws ShapeError unless every block agrees with (input_dim, hidden_dim).
  void validate() const;

  friend bool operator==(const GruParams&, const GruParams&) = default;
};

/// GruParams bound to a tape.
struct GruVars {
  Var w_z, w_r, w_h;
  Var u_z, u_r, u_h;
  Var b_z, b_r, b_h;

  /// Binds every block as a variable (trainable) or a constant.
  static GruVars bind(Tape& tape, const GruParams& params, bool trainable);

  std::array<Var, 9> blocks() const { return {w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h}; }
};

/// One GRU step for a batch: x is [b x d], h_prev is [b x n].
Var gru_cell_step(const GruVars& params, Var x, Var h_prev);

/// What multiplies the per-timestep outputs: nothing, a task mask shared by the batch, or a
/// [b x n] tensor of per-sample factors.
using OutputMask = std::variant<std::monostate, BinaryMask, Tensor>;

/// Unrolled encoder state. hidden[i] is the recurrent state h_i and outputs[i] the masked
/// output y'_i = h_i * m. Only hidden states feed the recurrence.
struct GruOutput {
  std::vector<Var> hidden;
  std::vector<Var> outputs;

  Var final_output() const { return outputs.back(); }
};

/// Runs the GRU from h_0 = 0 over inputs (one [b x d] Var per timestep).
/// Throws DomainError on an empty sequence.
GruOutput encode_sequence(const GruVars& params, std::span<const Var> inputs,
                          const OutputMask& mask = {});

/// Splits an embedded batch into timestep constants: [b x n x d] gives n Vars of [b x d], and
/// a single sequence [n x d] gives n Vars of [1 x d].
std::vector<Var> timestep_inputs(Tape& tape, const Tensor& embedded);

}  // namespace taskdrop
