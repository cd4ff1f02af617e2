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

#include <cmath>
#include <set>
#include <vector>

#include "taskdrop/error.hpp"
#include "taskdrop/metrics.hpp"
#include "taskdrop/taskgen.hpp"
#include "taskdrop/trainer.hpp"
#include "test_util.hpp"

namespace taskdrop {
namespace {

using testing::small_family;

std::set<int> lexicon(const SyntheticTaskSpec& t) {
  std::set<int> out;
  for (const TokenRange& r : {t.private_positive, t.private_negative}) {
    for (int tok = r.begin; tok < r.end; ++tok) out.insert(tok);
  }
  return out;
}

TEST(TaskFamily, DeterministicUnderSeed) {
  const TaskFamily a = generate_task_family(5, 4, small_family());
  const TaskFamily b = generate_task_family(5, 4, small_family());
  const TaskFamily c = generate_task_family(6, 4, small_family());
  EXPECT_EQ(a.embeddings.vectors, b.embeddings.vectors);
  EXPECT_NE(a.embeddings.vectors, c.embeddings.vectors);
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(task_dataset(a, t, Split::kTrain).examples, task_dataset(b, t, Split::kTrain).examples);
  }
}

TEST(TaskFamily, LexiconsAreDisjoint) {
  const TaskFamily f = generate_task_family(1, 6, small_family());
  std::set<int> shared;
  for (const TokenRange& r : {f.tasks[0].shared_positive, f.tasks[0].shared_negative}) {
    for (int tok = r.begin; tok < r.end; ++tok) shared.insert(tok);
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::set<int> li = lexicon(f.tasks[i]);
    EXPECT_EQ(li.size(), 8u);
    for (int tok : li) {
      EXPECT_FALSE(shared.count(tok));
      EXPECT_FALSE(f.tasks[i].neutral.contains(tok));
    }
    for (std::size_t j = i + 1; j < f.size(); ++j) {
      for (int tok : lexicon(f.tasks[j])) EXPECT_FALSE(li.count(tok)) << i << " vs " << j;
    }
    EXPECT_EQ(f.tasks[i].shared_positive, f.tasks[0].shared_positive);
  }
  EXPECT_EQ(f.embeddings.vocab_size(), 30 + 8 + 6 * 8);
}

TEST(TaskFamily, InvalidConfigs) {
  FamilyConfig c = small_family();
  c.private_vocab = 7;
  EXPECT_THROW(generate_task_family(1, 2, c), ConfigError);
  c = small_family(0.5);
  c.shared_vocab = 0;
  EXPECT_THROW(generate_task_family(1, 2, c), ConfigError);
  c = small_family();
  c.sentiment_tokens = 9;
  EXPECT_THROW(generate_task_family(1, 2, c), ConfigError);
  EXPECT_THROW(generate_task_family(1, 0, small_family()), ConfigError);
  EXPECT_THROW(preset("medium"), ConfigError);
  EXPECT_THROW(generate_task_family(1, 2, small_family()).task(2), LookupError);
}

TEST(TaskFamily, PresetsAndSignalRange) {
  EXPECT_EQ(preset("hi").tasks, 6u);
  EXPECT_EQ(preset("hi").family.shared_signal, 0.9);
  EXPECT_EQ(preset("lo").family.shared_signal, 0.2);
  const Preset mix = preset("mix");
  EXPECT_EQ(mix.tasks, 24u);
  const TaskFamily f = generate_task_family(3, mix.tasks, mix.family);
  std::set<double> distinct;
  for (const SyntheticTaskSpec& t : f.tasks) {
    EXPECT_GE(t.shared_signal, 0.2);
    EXPECT_LE(t.shared_signal, 0.9);
    distinct.insert(t.shared_signal);
  }
  EXPECT_GT(distinct.size(), 20u);
}

TEST(Dataset, ExactLabelBalanceAndLength) {
  const TaskFamily f = generate_task_family(2, 1, small_family());
  for (Index size : {2, 10, 200}) {
    const Dataset d = generate_dataset(f.tasks[0], Split::kTrain, size, 11);
    int ones = 0;
    for (const Example& e : d.examples) {
      ones += e.label;
      EXPECT_EQ(e.tokens.size(), 8u);
    }
    EXPECT_EQ(ones, size / 2);
  }
  EXPECT_THROW(generate_dataset(f.tasks[0], Split::kTrain, 7, 11), ConfigError);
}

TEST(Dataset, ExtremeSimilarityPicksLexicon) {
  for (double sigma : {0.0, 1.0}) {
    const TaskFamily f = generate_task_family(2, 2, small_family(sigma));
    const SyntheticTaskSpec& t = f.tasks[1];
    for (const Example& e : task_dataset(f, 1, Split::kTrain).examples) {
      for (int tok : e.tokens) {
        if (t.neutral.contains(tok)) continue;
        const bool shared = t.shared_positive.contains(tok) || t.shared_negative.contains(tok);
        EXPECT_EQ(shared, sigma == 1.0);
        const bool positive = t.shared_positive.contains(tok) || t.private_positive.contains(tok);
        EXPECT_EQ(positive, e.label == 1);
      }
    }
  }
}

TEST(Dataset, NoSequenceInBothSplits) {
  FamilyConfig c = preset("lo").family;
  const TaskFamily f = generate_task_family(4, 2, c);
  for (int t = 0; t < 2; ++t) {
    std::set<std::vector<int>> train;
    for (const Example& e : task_dataset(f, t, Split::kTrain).examples) train.insert(e.tokens);
    for (const Example& e : task_dataset(f, t, Split::kTest).examples) {
      EXPECT_FALSE(train.count(e.tokens));
    }
  }
}

TEST(Embedding, UnitNormRowsAndShapes) {
  const TaskFamily f = generate_task_family(7, 2, small_family());
  const auto m = f.embeddings.vectors.matrix();
  for (Index r = 0; r < m.rows(); ++r) EXPECT_NEAR(m.row(r).norm(), 1.0, 1e-12);
  const Dataset d = task_dataset(f, 0, Split::kTest);
  const std::vector<Tensor> batches = embed(d, f.embeddings, 32);
  ASSERT_EQ(batches.size(), 4u);
  EXPECT_EQ(batches[0].shape(), (Shape{32, 8, 8}));
  EXPECT_EQ(batches[3].shape(), (Shape{4, 8, 8}));
  EXPECT_EQ(embed(d, f.embeddings, 32)[1], batches[1]);
  const Example& e = d.examples[33];
  for (Index k = 0; k < 8; ++k) {
    EXPECT_EQ(batches[1][(1 * 8 + 2) * 8 + k], m(e.tokens[2], k));
  }
}

TEST(Embedding, UnknownTokenIsVocabError) {
  const TaskFamily f = generate_task_family(7, 1, small_family());
  Dataset d = task_dataset(f, 0, Split::kTest);
  d.examples[0].tokens[0] = static_cast<int>(f.embeddings.vocab_size());
  const std::vector<std::size_t> idx{0};
  EXPECT_THROW(embed_batch(d, idx, f.embeddings), VocabError);
  d.examples[0].tokens[0] = -1;
  EXPECT_THROW(embed_batch(d, idx, f.embeddings), VocabError);
}

// Logistic regression on the summed token embeddings, trained by full-batch gradient descent.
double bag_of_embeddings_accuracy(const TaskFamily& f, int task) {
  auto features = [&](const Dataset& d) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Index>(d.size()), f.embeddings.dim() + 1);
    const auto table = f.embeddings.vectors.matrix();
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (int tok : d.examples[i].tokens) x.row(static_cast<Index>(i)).head(f.embeddings.dim()) += table.row(tok);
      x(static_cast<Index>(i), f.embeddings.dim()) = 1.0;
    }
    return x;
  };
  auto labels = [](const Dataset& d) {
    Eigen::VectorXd y(static_cast<Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) y(static_cast<Index>(i)) = d.examples[i].label;
    return y;
  };
  const Dataset train = task_dataset(f, task, Split::kTrain);
  const Dataset test = task_dataset(f, task, Split::kTest);
  const Eigen::MatrixXd x = features(train);
  const Eigen::VectorXd y = labels(train);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
  for (int it = 0; it < 2000; ++it) {
    const Eigen::VectorXd prob = (1.0 + (-(x * w)).array().exp()).inverse().matrix();
    w -= 0.5 * x.transpose() * (prob - y) / static_cast<double>(x.rows());
  }
  const Eigen::MatrixXd xt = features(test);
  const Eigen::VectorXd yt = labels(test);
  int correct = 0;
  for (Index i = 0; i < xt.rows(); ++i) correct += ((xt.row(i).dot(w) > 0.0) == (yt(i) > 0.5));
  return correct / static_cast<double>(xt.rows());
}

TEST(Learnability, NoiselessTasksAreLinearlySeparableInBagSpace) {
  for (const std::string& name : preset_names()) {
    FamilyConfig c = preset(name).family;
    c.noise = 0.0;
    const TaskFamily f = generate_task_family(9, 2, c);
    for (int t = 0; t < 2; ++t) EXPECT_GE(bag_of_embeddings_accuracy(f, t), 0.95) << name << " task " << t;
  }
}

double mean_off_diagonal_mta(double sigma, std::uint64_t seed) {
  FamilyConfig c = small_family(sigma);
  ModelConfig m;
  m.input_dim = c.embedding_dim;
  m.hidden_dim = 16;
  m.update_bias = -1.0;
  TrainConfig t;
  t.epochs = 8;
  t.batch_size = 16;
  t.learning_rate = 0.5;
  const Eigen::MatrixXd mta = mta_matrix(generate_task_family(seed, 3, c), m, t, seed);
  return (mta.sum() - mta.trace()) / 6.0;
}

TEST(Similarity, HighSignalFamiliesTransferBetter) {
  EXPECT_GE(mean_off_diagonal_mta(0.9, 1) - mean_off_diagonal_mta(0.1, 1), 0.1);
}

TEST(Similarity, TransferIsMonotoneInSharedSignal) {
  std::vector<double> means;
  for (double sigma : {0.1, 0.5, 0.9}) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) total += mean_off_diagonal_mta(sigma, seed);
    means.push_back(total / 5.0);
  }
  EXPECT_LE(means[0], means[1]);
  EXPECT_LE(means[1], means[2]);
}

}  // namespace
}  // namespace taskdrop
