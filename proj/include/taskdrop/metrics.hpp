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
#include <span>
#include <vector>

namespace taskdrop {

/// Test accuracies of a sequential run. Row t (1-based) holds a(tau, t) for tau = 1..t, the
/// accuracy on the tau-th task of the stream after training through the t-th. Rows that were
/// not evaluated are empty.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;
  explicit AccuracyMatrix(std::size_t tasks) : rows_(tasks) {}

  std::size_t tasks() const { return rows_.size(); }

  /// Throws DataError unless row has exactly t entries, all in [0, 1].
  void set_row(std::size_t t, std::vector<double> row);
  bool has_row(std::size_t t) const;
  /// Throws DataError when row t was not evaluated.
  const std::vector<double>& row(std::size_t t) const;
  double at(std::size_t tau, std::size_t t) const;

  const std::vector<std::vector<double>>& rows() const { return rows_; }

  friend bool operator==(const AccuracyMatrix&, const AccuracyMatrix&) = default;

 private:
  std::vector<std::vector<double>> rows_;
};

/// Mean of a(1..t, t). Throws DataError when row t is incomplete.
double averaged_accuracy(const AccuracyMatrix& matrix, std::size_t t);

/// Mean over tau <= t of (a(tau, t) - a_R) / (a_J - a_R) - 1, in percent. random_accuracy and
/// joint_accuracy are indexed by stream position (tau - 1). Throws DomainError when some
/// a_J <= a_R and DataError when row t is incomplete.
double forgetting_ratio(const AccuracyMatrix& matrix, std::size_t t,
                        std::span<const double> random_accuracy,
                        std::span<const double> joint_accuracy);

struct MeanStd {
  double mean = 0.0;
  /// Sample standard deviation (n - 1 denominator); 0 for a single value.
  double std = 0.0;
  std::size_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

/// Symmetrizes a transfer matrix T(i, j) = accuracy on task j of the model trained on task i
/// into MTA(i, j) = (T(i, j) + T(j, i)) / 2. The diagonal keeps the self-accuracy.
Eigen::MatrixXd mutual_transfer(const Eigen::MatrixXd& transfer);

enum class MtaSelect { kHighest, kLowest };

/// Ranks tasks by the off-diagonal row sum of an MTA matrix and returns the top or bottom k
/// task indices in rank order; ties go to the lower index. Throws DomainError when k exceeds
/// the task count.
std::vector<int> select_tasks_by_mta(const Eigen::MatrixXd& mta, std::size_t k, MtaSelect mode);

}  // namespace taskdrop
