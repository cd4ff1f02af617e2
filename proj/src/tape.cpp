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

#include "taskdrop/tape.hpp"

#include <utility>

#include "taskdrop/error.hpp"

namespace taskdrop {

const Tensor& Var::value() const {
  if (!tape_) throw UsageError("value() on an unbound Var");
  return tape_->value(*this);
}

const Tensor& Var::grad() const {
  if (!tape_) throw UsageError("grad() on an unbound Var");
  return tape_->grad(*this);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), nullptr, false, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), nullptr, true, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  if (backward_done_) throw UsageError("cannot record onto a tape after backward()");
  bool needs_grad = false;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw UsageError("op input belongs to a different tape");
    needs_grad = needs_grad || node(in).requires_grad;
  }
  nodes_.push_back(
      Node{std::move(value), Tensor(), needs_grad ? std::move(backward) : nullptr, needs_grad,
           false});
  return Var(this, nodes_.size() - 1);
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw UsageError("Var is not on this tape");
  return nodes_[v.id_];
}

Tape::Node& Tape::node(Var v) {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw UsageError("Var is not on this tape");
  return nodes_[v.id_];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

const Tensor& Tape::grad(Var v) const {
  if (!backward_done_) throw UsageError("grad() requested before backward()");
  return node(v).grad;
}

MatrixMap Tape::grad_buffer(Var v) {
  Node& n = node(v);
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad.matrix();
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this || loss.id_ >= nodes_.size()) {
    throw UsageError("backward() called with a loss that is not on this tape");
  }
  if (backward_done_) throw UsageError("backward() may run once per tape");
  Node& root = node(loss);
  if (root.value.size() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " +
                     shape_string(root.value.shape()));
  }
  if (root.requires_grad) {
    grad_buffer(loss).setOnes();
    for (std::size_t i = loss.id_ + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.has_grad && n.backward) n.backward(*this, n.value, n.grad);
    }
  }
  for (Node& n : nodes_) {
    if (!n.has_grad) {
      n.grad = Tensor(n.value.shape());
      n.has_grad = true;
    }
  }
  backward_done_ = true;
}

}  // namespace taskdrop
