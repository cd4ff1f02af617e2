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

#include "taskdrop/trainer.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include "taskdrop/error.hpp"

namespace taskdrop {

namespace {

constexpr std::uint64_t kShuffleTag = 0x736866;
constexpr std::uint64_t kDropoutTag = 0x64726f;
constexpr std::uint64_t kJointTag = 0x6a6e74;

TokenBatch gather(const Dataset& data, std::span<const std::size_t> indices) {
  TokenBatch batch;
  batch.batch = static_cast<Index>(indices.size());
  batch.seq_len = data.seq_len;
  batch.tokens.reserve(indices.size() * static_cast<std::size_t>(data.seq_len));
  batch.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    const Example& ex = data.examples.at(i);
    batch.tokens.insert(batch.tokens.end(), ex.tokens.begin(), ex.tokens.end());
    batch.labels.push_back(ex.label);
  }
  return batch;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

TaskStream::TaskStream(std::vector<TaskSplit> tasks_in_order) : tasks_(std::move(tasks_in_order)) {
  if (tasks_.empty()) throw DataError("a task stream needs at least one task");
}

const TaskSplit& TaskStream::at(std::size_t position) const {
  if (position < 1 || position > tasks_.size()) {
    throw IndexError("stream position " + std::to_string(position) + " outside 1.." +
                     std::to_string(tasks_.size()));
  }
  return tasks_[position - 1];
}

int TaskStream::task_id(std::size_t position) const { return at(position).task_id; }

std::vector<int> TaskStream::task_ids() const {
  std::vector<int> ids;
  for (const auto& t : tasks_) ids.push_back(t.task_id);
  return ids;
}

const Dataset& TaskStream::train_data(std::size_t position) const {
  const TaskSplit& t = at(position);
  log_.push_back({DataAccess::kTrain, position});
  return t.train;
}

const Dataset& TaskStream::test_data(std::size_t position) const {
  const TaskSplit& t = at(position);
  log_.push_back({DataAccess::kTest, position});
  return t.test;
}

TaskStream make_stream(const TaskFamily& family, std::span<const int> ordering) {
  std::vector<TaskSplit> tasks;
  tasks.reserve(ordering.size());
  for (int id : ordering) {
    tasks.push_back(TaskSplit{id, task_dataset(family, id, Split::kTrain),
                              task_dataset(family, id, Split::kTest)});
  }
  return TaskStream(std::move(tasks));
}

std::vector<TokenBatch> shuffled_batches(const Dataset& data, Index batch_size, Rng& rng) {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  // Round-robin over labels keeps the label mix of every batch as even as the data allows.
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i : order) by_label[data.examples[i].label].push_back(i);
  order.clear();
  for (std::size_t k = 0; order.size() < data.size(); ++k) {
    for (const auto& [label, members] : by_label) {
      if (k < members.size()) order.push_back(members[k]);
    }
  }
  std::vector<TokenBatch> batches;
  const auto step = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < order.size(); start += step) {
    const std::size_t stop = std::min(order.size(), start + step);
    batches.push_back(gather(data, std::span<const std::size_t>(order).subspan(start, stop - start)));
  }
  return batches;
}

double accuracy(const Model& model, int task_id, const Dataset& data, Index batch_size) {
  if (data.size() == 0) throw DataError("accuracy of an empty dataset");
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  const auto step = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < data.size(); start += step) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + step); ++i) idx.push_back(i);
    const TokenBatch batch = gather(data, idx);
    const Tensor logits = model.forward(task_id, batch, Mode::kEval);
    const auto m = logits.matrix();
    for (Index r = 0; r < m.rows(); ++r) {
      Index predicted = 0;
      m.row(r).maxCoeff(&predicted);
      if (predicted == batch.labels[static_cast<std::size_t>(r)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<double> fit_task(Model& model, int task_id, const Dataset& train,
                             const TrainConfig& config, Rng& shuffle_rng, Rng& dropout_rng) {
  config.validate();
  model.begin_task(task_id);
  std::vector<double> epoch_losses;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    std::size_t seen = 0;
    for (const TokenBatch& batch : shuffled_batches(train, config.batch_size, shuffle_rng)) {
      total += model.train_step(task_id, batch, config.learning_rate, dropout_rng) *
               static_cast<double>(batch.batch);
      seen += static_cast<std::size_t>(batch.batch);
    }
    epoch_losses.push_back(seen ? total / static_cast<double>(seen) : 0.0);
  }
  return epoch_losses;
}

ContinualLearner::ContinualLearner(Model& model, std::vector<int> task_order, TrainConfig config,
                                   std::uint64_t seed)
    : model_(model),
      order_(std::move(task_order)),
      config_(config),
      seed_(seed),
      dropout_rng_(derive_seed(seed, {kDropoutTag})) {
  config_.validate();
  if (model_.variant().tag == Variant::kMultiTaskJoint) {
    throw ConfigError("MultiTaskJoint is trained with run_joint, not sequentially");
  }
}

std::vector<double> ContinualLearner::train_task(int task_id, const Dataset& train) {
  if (trained_ >= order_.size()) {
    throw SequencingError("all " + std::to_string(order_.size()) + " tasks are already trained");
  }
  if (order_[trained_] != task_id) {
    throw SequencingError("expected task " + std::to_string(order_[trained_]) +
                          " at position " + std::to_string(trained_ + 1) + ", got task " +
                          std::to_string(task_id));
  }
  if (train.task_id != task_id) {
    throw SequencingError("training data belongs to task " + std::to_string(train.task_id));
  }
  Rng shuffle_rng(derive_seed(seed_, {kShuffleTag, static_cast<std::uint64_t>(task_id)}));
  auto losses = fit_task(model_, task_id, train, config_, shuffle_rng, dropout_rng_);
  ++trained_;
  return losses;
}

std::vector<double> ContinualLearner::evaluate_all(const TaskStream& stream, std::size_t t) const {
  if (t < 1 || t > trained_) {
    throw SequencingError("cannot evaluate after " + std::to_string(t) + " tasks; only " +
                          std::to_string(trained_) + " trained");
  }
  std::vector<double> row;
  row.reserve(t);
  for (std::size_t tau = 1; tau <= t; ++tau) {
    const int id = stream.task_id(tau);
    if (id != order_[tau - 1]) throw SequencingError("stream order differs from the learner's");
    row.push_back(accuracy(model_, id, stream.test_data(tau)));
  }
  return row;
}

AccuracyMatrix run_sequential(Model& model, const TaskStream& stream, const TrainConfig& config,
                              std::uint64_t seed) {
  ContinualLearner learner(model, stream.task_ids(), config, seed);
  AccuracyMatrix matrix(stream.size());
  for (std::size_t t = 1; t <= stream.size(); ++t) {
    learner.train_task(stream.task_id(t), stream.train_data(t));
    matrix.set_row(t, learner.evaluate_all(stream, t));
  }
  return matrix;
}

AccuracyMatrix run_joint(const ModelConfig& model_config, const Tensor& embeddings,
                         const TaskStream& stream, const TrainConfig& config, std::uint64_t seed,
                         std::span<const std::size_t> rows) {
  config.validate();
  AccuracyMatrix matrix(stream.size());
  for (std::size_t t : rows) {
    if (t < 1 || t > stream.size()) throw ConfigError("joint row outside the stream");
    if (matrix.has_row(t)) continue;
    Model model(VariantConfig{Variant::kMultiTaskJoint, 1.0}, model_config, embeddings);
    for (std::size_t tau = 1; tau <= t; ++tau) model.begin_task(stream.task_id(tau));
    Rng order_rng(derive_seed(seed, {kJointTag, t}));
    Rng dropout_rng(derive_seed(seed, {kDropoutTag}));
    std::vector<Rng> shuffle_rngs;
    for (std::size_t tau = 1; tau <= t; ++tau) {
      shuffle_rngs.emplace_back(
          derive_seed(seed, {kShuffleTag, static_cast<std::uint64_t>(stream.task_id(tau))}));
    }
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::vector<std::pair<int, TokenBatch>> work;
      for (std::size_t tau = 1; tau <= t; ++tau) {
        for (TokenBatch& b : shuffled_batches(stream.train_data(tau), config.batch_size,
                                              shuffle_rngs[tau - 1])) {
          work.emplace_back(stream.task_id(tau), std::move(b));
        }
      }
      order_rng.shuffle(std::span<std::pair<int, TokenBatch>>(work));
      for (const auto& [id, batch] : work) {
        model.train_step(id, batch, config.learning_rate, dropout_rng);
      }
    }
    std::vector<double> row;
    for (std::size_t tau = 1; tau <= t; ++tau) {
      row.push_back(accuracy(model, stream.task_id(tau), stream.test_data(tau)));
    }
    matrix.set_row(t, std::move(row));
  }
  return matrix;
}

Eigen::MatrixXd transfer_matrix(const TaskFamily& family, const ModelConfig& model_config,
                                const TrainConfig& config, std::uint64_t seed) {
  const auto n = static_cast<Index>(family.size());
  if (n < 2) throw DataError("transfer matrix needs at least 2 tasks");
  std::vector<Dataset> tests;
  for (const auto& spec : family.tasks) tests.push_back(task_dataset(family, spec.task_id, Split::kTest));
  Eigen::MatrixXd transfer(n, n);
  for (Index i = 0; i < n; ++i) {
    const int id = family.tasks[static_cast<std::size_t>(i)].task_id;
    Model model(VariantConfig{Variant::kNoMasking, 1.0}, model_config, family.embeddings.vectors);
    Rng shuffle_rng(derive_seed(seed, {kShuffleTag, static_cast<std::uint64_t>(id)}));
    Rng dropout_rng(derive_seed(seed, {kDropoutTag}));
    fit_task(model, id, task_dataset(family, id, Split::kTrain), config, shuffle_rng, dropout_rng);
    for (Index j = 0; j < n; ++j) {
      transfer(i, j) = accuracy(model, id, tests[static_cast<std::size_t>(j)]);
    }
  }
  return transfer;
}

Eigen::MatrixXd mta_matrix(const TaskFamily& family, const ModelConfig& model_config,
                           const TrainConfig& config, std::uint64_t seed) {
  return mutual_transfer(transfer_matrix(family, model_config, config, seed));
}

}  // namespace taskdrop
