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
#include <initializer_list>
#include <vector>

#include "taskdrop/tensor.hpp"

namespace taskdrop {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Tensor& grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Linear record of primitive ops for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the record is already topologically sorted and
/// backward() replays it in reverse. Only nodes that depend on a variable() carry gradients;
/// constants and values downstream of constants alone are skipped. After backward(), grad()
/// of any node that the loss does not reach is exactly zero.
///
/// A tape is single-owner and must outlive every Var it hands out.
class Tape {
 public:
  /// Propagates the gradient of one node into its inputs through grad_buffer().
  using Backward = std::function<void(Tape&, const Tensor& out, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);

  /// Records an op output. The node requires a gradient iff any input does; if none does,
  /// the backward closure is dropped.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const;

  /// Reverse accumulation from a scalar loss recorded on this tape.
  void backward(Var loss);

  /// Gradient buffer of v as a matrix view, zero-initialized on first touch. Only called from
  /// Backward closures, and only for inputs with requires_grad().
  MatrixMap grad_buffer(Var v);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    bool requires_grad = false;
    bool has_grad = false;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace taskdrop
