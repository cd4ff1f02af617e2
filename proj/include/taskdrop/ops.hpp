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

#include <span>

#include "taskdrop/tape.hpp"

// Differentiable primitives. Every op records its output on the tape of its inputs.
namespace taskdrop {

enum class ElementwiseOp { kAdd, kSub, kMul };
enum class Activation { kSigmoid, kTanh };

/// [m x k] * [k x n]. Rank-1 operands are treated as a single row.
Var matmul(Var a, Var b);

/// Pointwise a (op) b. b either has the shape of a, or is a row of length cols(a)
/// (shape [n] or [1, n]) broadcast over the leading batch axis.
Var elementwise(ElementwiseOp op, Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var activation(Activation kind, Var x);
Var sigmoid(Var x);
Var tanh(Var x);

/// Sum of all entries, as a scalar.
Var sum(Var x);

/// Mean over the batch of -log softmax(logits)[label], with row-max subtraction.
Var cross_entropy_logits(Var logits, std::span<const int> labels);

/// Rows of table selected by ids: [ids.size() x cols(table)]. Gradients scatter-add back.
Var gather_rows(Var table, std::span<const int> ids);

/// Softmax of each row, not recorded.
RowMatrix softmax_rows(const Eigen::Ref<const RowMatrix>& logits);

}  // namespace taskdrop
