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

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace taskdrop {

using Index = Eigen::Index;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using Shape = std::vector<Index>;
/// Storage aligned to Eigen's widest packet, so vectorized kernels see the same alignment
/// on every run and results do not depend on where the allocator placed the buffer.
using Storage = std::vector<double, Eigen::aligned_allocator<double>>;

std::string shape_string(const Shape& shape);

/// Dense row-major tensor of doubles.
///
/// Rank 0 holds a single scalar. matrix() views rank <= 2 data as a 2-D matrix (a rank-1
/// tensor is a single row) and folds leading axes of higher ranks into the row count, so a
/// [b, n, d] batch is seen as a (b*n) x d matrix.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor from_matrix(const Eigen::Ref<const RowMatrix>& m);

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return static_cast<Index>(data_.size()); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }

  /// Row count of the matrix() view.
  Index rows() const;
  /// Column count of the matrix() view (the last axis).
  Index cols() const;

  MatrixMap matrix() { return MatrixMap(data_.data(), rows(), cols()); }
  ConstMatrixMap matrix() const { return ConstMatrixMap(data_.data(), rows(), cols()); }

  Eigen::Map<Eigen::VectorXd> flat() { return {data_.data(), size()}; }
  Eigen::Map<const Eigen::VectorXd> flat() const { return {data_.data(), size()}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const Storage& values() const { return data_; }

  double& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }
  double& at(Index row, Index col) { return data_[static_cast<std::size_t>(row * cols() + col)]; }
  double at(Index row, Index col) const {
    return data_[static_cast<std::size_t>(row * cols() + col)];
  }

  /// The single value of a size-1 tensor.
  double item() const;

  bool all_finite() const;
  void set_zero();

  /// Bitwise equality of shape and contents.
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  Shape shape_{};
  Storage data_{0.0};
};

/// Product of the dimensions; 1 for rank 0.
Index shape_size(const Shape& shape);

}  // namespace taskdrop
