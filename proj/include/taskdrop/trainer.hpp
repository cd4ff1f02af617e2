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
#include <cstdint>
#include <span>
#include <vector>

#include "taskdrop/metrics.hpp"
#include "taskdrop/model.hpp"
#include "taskdrop/taskgen.hpp"

namespace taskdrop {

struct TrainConfig {
  int epochs = 10;
  Index batch_size = 32;
  double learning_rate = 0.1;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TaskSplit {
  int task_id = 0;
  Dataset train;
  Dataset test;
};

enum class DataAccess { kTrain, kTest };

struct AccessRecord {
  DataAccess kind;
  std::size_t position;
  friend bool operator==(const AccessRecord&, const AccessRecord&) = default;
};

/// Tasks in stream order, positions 1..T. Every data access is logged so tests can check that
/// training never touches an earlier task's training set.
class TaskStream {
 public:
  explicit TaskStream(std::vector<TaskSplit> tasks_in_order);

  std::size_t size() const { return tasks_.size(); }
  int task_id(std::size_t position) const;
  std::vector<int> task_ids() const;

  const Dataset& train_data(std::size_t position) const;
  const Dataset& test_data(std::size_t position) const;

  const std::vector<AccessRecord>& access_log() const { return log_; }

 private:
  const TaskSplit& at(std::size_t position) const;

  std::vector<TaskSplit> tasks_;
  mutable std::vector<AccessRecord> log_;
};

/// Generates the datasets of `ordering` (task ids of the family) as a stream.
TaskStream make_stream(const TaskFamily& family, std::span<const int> ordering);

/// Seeded shuffle of the dataset into token batches of at most batch_size. Labels are
/// interleaved, so a balanced dataset gives batches with equal label counts.
std::vector<TokenBatch> shuffled_batches(const Dataset& data, Index batch_size, Rng& rng);

/// Fraction of correctly classified examples with the head (and mask) of task_id.
double accuracy(const Model& model, int task_id, const Dataset& data, Index batch_size = 250);

/// E epochs of mini-batch SGD on one task. Returns the mean training loss of every epoch.
/// Does not enforce stream order; ContinualLearner does.
std::vector<double> fit_task(Model& model, int task_id, const Dataset& train,
                             const TrainConfig& config, Rng& shuffle_rng, Rng& dropout_rng);

/// Sequential learner over a fixed task order.
///
/// train_task() only accepts the next task of the order and only ever sees that task's
/// training data. The task's head (and mask) are created right before its first step.
class ContinualLearner {
 public:
  ContinualLearner(Model& model, std::vector<int> task_order, TrainConfig config,
                   std::uint64_t seed);

  /// Throws SequencingError unless task_id is the next task of the order.
  std::vector<double> train_task(int task_id, const Dataset& train);

  /// a(tau, t) for tau = 1..t. Throws SequencingError when t exceeds the trained count.
  std::vector<double> evaluate_all(const TaskStream& stream, std::size_t t) const;

  std::size_t trained() const { return trained_; }
  const Model& model() const { return model_; }

 private:
  Model& model_;
  std::vector<int> order_;
  TrainConfig config_;
  std::uint64_t seed_;
  Rng dropout_rng_;
  std::size_t trained_ = 0;
};

/// Trains through the whole stream, evaluating every row. Any variant but MultiTaskJoint.
AccuracyMatrix run_sequential(Model& model, const TaskStream& stream, const TrainConfig& config,
                              std::uint64_t seed);

/// Joint upper bound: for every t in rows, a fresh MultiTaskJoint model is trained on the
/// union of tasks 1..t (E epochs over all their batches, interleaved) and evaluated on each.
AccuracyMatrix run_joint(const ModelConfig& model_config, const Tensor& embeddings,
                         const TaskStream& stream, const TrainConfig& config, std::uint64_t seed,
                         std::span<const std::size_t> rows);

/// Transfer matrix T(i, j): accuracy on task j's test set of a single-task model trained on
/// task i, read through head i. Feed it to mutual_transfer() for MTA.
Eigen::MatrixXd transfer_matrix(const TaskFamily& family, const ModelConfig& model_config,
                                const TrainConfig& config, std::uint64_t seed);

/// mutual_transfer(transfer_matrix(...)).
Eigen::MatrixXd mta_matrix(const TaskFamily& family, const ModelConfig& model_config,
                           const TrainConfig& config, std::uint64_t seed);

}  // namespace taskdrop
