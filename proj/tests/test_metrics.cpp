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
#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "taskdrop/error.hpp"
#include "taskdrop/metrics.hpp"
#include "taskdrop/trainer.hpp"
#include "test_util.hpp"

namespace taskdrop {
namespace {

using testing::small_family;

AccuracyMatrix lower(std::vector<std::vector<double>> rows) {
  AccuracyMatrix m(rows.size());
  for (std::size_t t = 1; t <= rows.size(); ++t) m.set_row(t, rows[t - 1]);
  return m;
}

TEST(AccuracyMatrix, RowValidation) {
  AccuracyMatrix m(3);
  EXPECT_THROW(m.set_row(2, {0.5}), DataError);
  EXPECT_THROW(m.set_row(1, {1.5}), DataError);
  EXPECT_THROW(m.set_row(4, {0.5, 0.5, 0.5, 0.5}), DataError);
  m.set_row(2, {0.5, 0.75});
  EXPECT_TRUE(m.has_row(2));
  EXPECT_FALSE(m.has_row(1));
  EXPECT_EQ(m.at(2, 2), 0.75);
  EXPECT_THROW(m.row(1), DataError);
}

TEST(AveragedAccuracy, Examples) {
  const AccuracyMatrix m = lower({{0.9}, {0.8, 0.9}, {0.6, 0.6, 0.6}});
  EXPECT_DOUBLE_EQ(averaged_accuracy(m, 2), 0.85);
  EXPECT_EQ(averaged_accuracy(m, 3), 0.6);
  EXPECT_EQ(averaged_accuracy(m, 1), 0.9);
  AccuracyMatrix partial(3);
  partial.set_row(3, {0.5, 0.5, 0.5});
  EXPECT_THROW(averaged_accuracy(partial, 2), DataError);
}

TEST(AveragedAccuracy, MonotoneInEveryEntry) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> row(4);
    for (double& v : row) v = rng.uniform(0.0, 0.9);
    AccuracyMatrix a(4), b(4);
    a.set_row(4, row);
    row[rng.below(4)] += 0.05;
    b.set_row(4, row);
    EXPECT_GT(averaged_accuracy(b, 4), averaged_accuracy(a, 4));
  }
}

TEST(ForgettingRatio, Anchors) {
  const std::vector<double> random{0.5, 0.5};
  const std::vector<double> joint{0.9, 0.8};
  EXPECT_EQ(forgetting_ratio(lower({{0.9}, {0.9, 0.8}}), 2, random, joint), 0.0);
  EXPECT_EQ(forgetting_ratio(lower({{0.9}, {0.5, 0.5}}), 2, random, joint), -100.0);
  const std::vector<double> r1{0.5}, j1{0.9};
  EXPECT_NEAR(forgetting_ratio(lower({{0.7}}), 1, r1, j1), -50.0, 1e-12);
}

TEST(ForgettingRatio, Errors) {
  const AccuracyMatrix m = lower({{0.9}, {0.9, 0.8}});
  const std::vector<double> random{0.5, 0.5};
  const std::vector<double> flat{0.9, 0.5};
  EXPECT_THROW(forgetting_ratio(m, 2, random, flat), DomainError);
  AccuracyMatrix partial(2);
  EXPECT_THROW(forgetting_ratio(partial, 2, random, std::vector<double>{0.9, 0.9}), DataError);
}

TEST(MeanStd, SampleDeviation) {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const MeanStd s = mean_std(v);
  EXPECT_EQ(s.mean, 5.0);
  EXPECT_NEAR(s.std, std::sqrt(32.0 / 7.0), 1e-12);
  EXPECT_EQ(s.n, 8u);
  EXPECT_EQ(mean_std(std::vector<double>{3.0}).std, 0.0);
}

TEST(Mta, SymmetrizesTransfer) {
  Eigen::MatrixXd t(3, 3);
  t << 0.9, 0.6, 0.7, 0.8, 0.95, 0.5, 0.5, 0.6, 0.85;
  const Eigen::MatrixXd m = mutual_transfer(t);
  EXPECT_TRUE(m.isApprox(m.transpose(), 0.0));
  EXPECT_DOUBLE_EQ(m(0, 1), 0.7);
  EXPECT_EQ(m(1, 1), 0.95);
}

TEST(SelectByMta, IdentityLowestAndErrors) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(4, 4, 0.8);
  EXPECT_EQ(select_tasks_by_mta(m, 4, MtaSelect::kHighest), (std::vector<int>{0, 1, 2, 3}));
  m.row(2).setConstant(0.5);
  m.col(2).setConstant(0.5);
  EXPECT_EQ(select_tasks_by_mta(m, 1, MtaSelect::kLowest), std::vector<int>{2});
  EXPECT_EQ(select_tasks_by_mta(m, 1, MtaSelect::kHighest), std::vector<int>{0});
  EXPECT_THROW(select_tasks_by_mta(m, 5, MtaSelect::kHighest), DomainError);
}

ModelConfig mta_model(const FamilyConfig& f) {
  ModelConfig m;
  m.input_dim = f.embedding_dim;
  m.hidden_dim = 16;
  m.update_bias = -1.0;
  return m;
}

TrainConfig mta_train() {
  TrainConfig t;
  t.epochs = 8;
  t.batch_size = 16;
  t.learning_rate = 0.5;
  return t;
}

TEST(MtaOracles, DuplicateTaskTransfersLikeItself) {
  const FamilyConfig c = small_family(0.0);
  TaskFamily f = generate_task_family(2, 2, c);
  f.tasks[1].private_positive = f.tasks[0].private_positive;
  f.tasks[1].private_negative = f.tasks[0].private_negative;
  const Eigen::MatrixXd mta = mta_matrix(f, mta_model(c), mta_train(), 2);
  EXPECT_NEAR(mta(0, 1), 0.5 * (mta(0, 0) + mta(1, 1)), 0.05);
  EXPECT_GT(mta(0, 0), 0.8);
}

TEST(MtaOracles, DisjointVocabulariesTransferAtChance) {
  // Wide embeddings keep the private lexicons of different tasks close to orthogonal.
  FamilyConfig c = small_family(0.0);
  c.embedding_dim = 32;
  const Eigen::MatrixXd mta = mta_matrix(generate_task_family(3, 4, c), mta_model(c), mta_train(), 3);
  EXPECT_NEAR((mta.sum() - mta.trace()) / 12.0, 0.5, 0.05);
}

TEST(MtaOracles, HighestSelectionRecoversSimilarTier) {
  const FamilyConfig c = small_family(0.5);
  TaskFamily f = generate_task_family(4, 12, c);
  const double tiers[] = {0.1, 0.95, 0.5};
  for (int i = 0; i < 12; ++i) f.tasks[static_cast<std::size_t>(i)].shared_signal = tiers[i % 3];
  const Eigen::MatrixXd mta = mta_matrix(f, mta_model(c), mta_train(), 4);
  std::vector<int> top = select_tasks_by_mta(mta, 4, MtaSelect::kHighest);
  std::sort(top.begin(), top.end());
  EXPECT_EQ(top, (std::vector<int>{1, 4, 7, 10}));
}

}  // namespace
}  // namespace taskdrop
