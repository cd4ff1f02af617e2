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

#include "taskdrop/ops.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "taskdrop/error.hpp"

namespace taskdrop {

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw UsageError("op on an unbound Var");
  return *a.tape();
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  if (b.shape() == a.shape()) return false;
  const bool row_shape = b.rank() == 1 || (b.rank() == 2 && b.dim(0) == 1);
  return row_shape && a.rank() >= 1 && b.size() == a.cols();
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() > 2 || bv.rank() > 2 || av.cols() != bv.rows()) {
    throw ShapeError("matmul of " + shape_string(av.shape()) + " by " +
                     shape_string(bv.shape()));
  }
  Tensor out(Shape{av.rows(), bv.cols()});
  out.matrix().noalias() = av.matrix() * bv.matrix();
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(a)) t.grad_buffer(a).noalias() += g.matrix() * b.value().matrix().transpose();
    if (t.requires_grad(b)) t.grad_buffer(b).noalias() += a.value().matrix().transpose() * g.matrix();
  });
}

Var elementwise(ElementwiseOp op, Var a, Var b) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool broadcast = is_row_broadcast(av, bv);
  if (!broadcast && av.shape() != bv.shape()) {
    throw ShapeError("elementwise op on " + shape_string(av.shape()) + " and " +
                     shape_string(bv.shape()));
  }
  Tensor out(av.shape());
  auto o = out.matrix().array();
  const auto x = av.matrix().array();
  if (broadcast) {
    const auto row = bv.flat().transpose().array();
    for (Index r = 0; r < av.rows(); ++r) {
      switch (op) {
        case ElementwiseOp::kAdd: o.row(r) = x.row(r) + row; break;
        case ElementwiseOp::kSub: o.row(r) = x.row(r) - row; break;
        case ElementwiseOp::kMul: o.row(r) = x.row(r) * row; break;
      }
    }
  } else {
    const auto y = bv.matrix().array();
    switch (op) {
      case ElementwiseOp::kAdd: o = x + y; break;
      case ElementwiseOp::kSub: o = x - y; break;
      case ElementwiseOp::kMul: o = x * y; break;
    }
  }
  return tape.record(std::move(out), {a, b}, [op, a, b, broadcast](Tape& t, const Tensor&, const Tensor& g) {
    const auto ga = g.matrix().array();
    if (t.requires_grad(a)) {
      auto da = t.grad_buffer(a).array();
      if (op == ElementwiseOp::kMul) {
        if (broadcast) {
          const auto row = b.value().flat().transpose().array();
          for (Index r = 0; r < da.rows(); ++r) da.row(r) += ga.row(r) * row;
        } else {
          da += ga * b.value().matrix().array();
        }
      } else {
        da += ga;
      }
    }
    if (t.requires_grad(b)) {
      MatrixMap db_mat = t.grad_buffer(b);
      const double sign = op == ElementwiseOp::kSub ? -1.0 : 1.0;
      if (broadcast) {
        // db has a single row; the batch axis is summed out.
        auto db = db_mat.array();
        const auto x = a.value().matrix().array();
        for (Index r = 0; r < ga.rows(); ++r) {
          if (op == ElementwiseOp::kMul) {
            db.row(0) += ga.row(r) * x.row(r);
          } else {
            db.row(0) += sign * ga.row(r);
          }
        }
      } else if (op == ElementwiseOp::kMul) {
        db_mat.array() += ga * a.value().matrix().array();
      } else {
        db_mat.array() += sign * ga;
      }
    }
  });
}

Var add(Var a, Var b) { return elementwise(ElementwiseOp::kAdd, a, b); }
Var sub(Var a, Var b) { return elementwise(ElementwiseOp::kSub, a, b); }
Var mul(Var a, Var b) { return elementwise(ElementwiseOp::kMul, a, b); }

Var activation(Activation kind, Var x) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  if (!xv.all_finite()) throw DomainError("activation of a non-finite tensor");
  Tensor out(xv.shape());
  if (kind == Activation::kSigmoid) {
    out.matrix().array() = 1.0 / (1.0 + (-xv.matrix().array()).exp());
  } else {
    out.matrix().array() = xv.matrix().array().tanh();
  }
  return tape.record(std::move(out), {x}, [kind, x](Tape& t, const Tensor& y, const Tensor& g) {
    const auto yv = y.matrix().array();
    auto dx = t.grad_buffer(x).array();
    if (kind == Activation::kSigmoid) {
      dx += g.matrix().array() * yv * (1.0 - yv);
    } else {
      dx += g.matrix().array() * (1.0 - yv * yv);
    }
  });
}

Var sigmoid(Var x) { return activation(Activation::kSigmoid, x); }
Var tanh(Var x) { return activation(Activation::kTanh, x); }

Var sum(Var x) {
  Tape& tape = tape_of(x);
  const double total = x.value().flat().sum();
  return tape.record(Tensor::scalar(total), {x}, [x](Tape& t, const Tensor&, const Tensor& g) {
    t.grad_buffer(x).array() += g.item();
  });
}

RowMatrix softmax_rows(const Eigen::Ref<const RowMatrix>& logits) {
  RowMatrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

Var cross_entropy_logits(Var logits, std::span<const int> labels) {
  Tape& tape = tape_of(logits);
  const Tensor& lv = logits.value();
  if (lv.rank() != 2) throw ShapeError("cross_entropy_logits expects [batch x C] logits");
  const Index batch = lv.rows();
  const Index classes = lv.cols();
  if (static_cast<Index>(labels.size()) != batch) {
    throw ShapeError("got " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(batch));
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw IndexError("label " + std::to_string(y) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
  }
  const auto m = lv.matrix();
  const Eigen::VectorXd row_max = m.rowwise().maxCoeff();
  double loss = 0.0;
  for (Index r = 0; r < batch; ++r) {
    const double log_norm = std::log((m.row(r).array() - row_max(r)).exp().sum()) + row_max(r);
    loss += log_norm - m(r, labels[static_cast<std::size_t>(r)]);
  }
  loss /= static_cast<double>(batch);
  std::vector<int> label_copy(labels.begin(), labels.end());
  return tape.record(Tensor::scalar(loss), {logits},
                     [logits, label_copy = std::move(label_copy)](Tape& t, const Tensor&, const Tensor& g) {
                       RowMatrix p = softmax_rows(logits.value().matrix());
                       for (std::size_t r = 0; r < label_copy.size(); ++r) {
                         p(static_cast<Index>(r), label_copy[r]) -= 1.0;
                       }
                       const double scale = g.item() / static_cast<double>(p.rows());
                       t.grad_buffer(logits) += scale * p;
                     });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Tape& tape = tape_of(table);
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw ShapeError("gather_rows expects a rank-2 table");
  Tensor out(Shape{static_cast<Index>(ids.size()), tv.cols()});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) {
      throw IndexError("row id " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(tv.rows()) + " rows");
    }
    out.matrix().row(static_cast<Index>(i)) = tv.matrix().row(ids[i]);
  }
  std::vector<int> id_copy(ids.begin(), ids.end());
  return tape.record(std::move(out), {table},
                     [table, id_copy = std::move(id_copy)](Tape& t, const Tensor&, const Tensor& g) {
                       MatrixMap dt = t.grad_buffer(table);
                       for (std::size_t i = 0; i < id_copy.size(); ++i) {
                         dt.row(id_copy[i]) += g.matrix().row(static_cast<Index>(i));
                       }
                     });
}

}  // namespace taskdrop
