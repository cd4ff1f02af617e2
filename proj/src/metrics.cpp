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

#include "taskdrop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "taskdrop/error.hpp"

namespace taskdrop {

void AccuracyMatrix::set_row(std::size_t t, std::vector<double> row) {
  if (t < 1 || t > rows_.size()) {
    throw DataError("row " + std::to_string(t) + " outside a " + std::to_string(rows_.size()) +
                    "-task matrix");
  }
  if (row.size() != t) {
    throw DataError("row " + std::to_string(t) + " needs " + std::to_string(t) +
                    " entries, got " + std::to_string(row.size()));
  }
  for (double a : row) {
    if (!(a >= 0.0 && a <= 1.0)) throw DataError("accuracy outside [0, 1]");
  }
  rows_[t - 1] = std::move(row);
}

bool AccuracyMatrix::has_row(std::size_t t) const {
  return t >= 1 && t <= rows_.size() && rows_[t - 1].size() == t;
}

const std::vector<double>& AccuracyMatrix::row(std::size_t t) const {
  if (!has_row(t)) throw DataError("row " + std::to_string(t) + " was not evaluated");
  return rows_[t - 1];
}

double AccuracyMatrix::at(std::size_t tau, std::size_t t) const {
  const auto& r = row(t);
  if (tau < 1 || tau > t) throw DataError("a(tau, t) needs 1 <= tau <= t");
  return r[tau - 1];
}

double averaged_accuracy(const AccuracyMatrix& matrix, std::size_t t) {
  const auto& r = matrix.row(t);
  return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(t);
}

double forgetting_ratio(const AccuracyMatrix& matrix, std::size_t t,
                        std::span<const double> random_accuracy,
                        std::span<const double> joint_accuracy) {
  const auto& r = matrix.row(t);
  if (random_accuracy.size() < t || joint_accuracy.size() < t) {
    throw DataError("forgetting ratio needs a_R and a_J for every task up to t");
  }
  double total = 0.0;
  for (std::size_t tau = 0; tau < t; ++tau) {
    const double span = joint_accuracy[tau] - random_accuracy[tau];
    if (!(span > 0.0)) {
      throw DomainError("joint accuracy must exceed random accuracy for task " +
                        std::to_string(tau + 1));
    }
    total += (r[tau] - random_accuracy[tau]) / span - 1.0;
  }
  return 100.0 * total / static_cast<double>(t);
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(out.n);
  if (out.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(out.n - 1));
  }
  return out;
}

Eigen::MatrixXd mutual_transfer(const Eigen::MatrixXd& transfer) {
  if (transfer.rows() != transfer.cols()) throw ShapeError("transfer matrix must be square");
  return 0.5 * (transfer + transfer.transpose());
}

std::vector<int> select_tasks_by_mta(const Eigen::MatrixXd& mta, std::size_t k, MtaSelect mode) {
  const auto n = static_cast<std::size_t>(mta.rows());
  if (mta.rows() != mta.cols()) throw ShapeError("MTA matrix must be square");
  if (k > n) {
    throw DomainError("cannot select " + std::to_string(k) + " of " + std::to_string(n) +
                      " tasks");
  }
  const Eigen::VectorXd totals = mta.rowwise().sum() - mta.diagonal();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mode == MtaSelect::kHighest ? totals(a) > totals(b) : totals(a) < totals(b);
  });
  order.resize(k);
  return order;
}

}  // namespace taskdrop
