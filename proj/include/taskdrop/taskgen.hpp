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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "taskdrop/tensor.hpp"

// Synthetic binary-sentiment task families.
//
// Every sequence is filler tokens with a few sentiment tokens mixed in. A sentiment token
// carries the label's polarity (or the opposite one, with the noise rate) and comes from the
// family-wide shared lexicon with probability shared_signal, otherwise from the task's private
// lexicon. shared_signal is the similarity knob: at 1 every task speaks the same sentiment
// language, at 0 tasks share nothing but filler.
namespace taskdrop {

/// Half-open token id range [begin, end).
struct TokenRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool contains(int token) const { return token >= begin && token < end; }
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

struct FamilyConfig {
  /// Used for every task unless shared_signal_range is set.
  double shared_signal = 0.5;
  /// When set, each task draws its own shared_signal uniformly from this range.
  std::optional<std::pair<double, double>> shared_signal_range;
  /// Total shared lexicon size, half positive and half negative.
  Index shared_vocab = 40;
  /// Private lexicon size per task, half positive and half negative.
  Index private_vocab = 40;
  Index neutral_vocab = 200;
  Index seq_len = 20;
  /// Sentiment tokens per sequence.
  Index sentiment_tokens = 4;
  Index train_size = 2000;
  Index test_size = 500;
  /// Probability that a sentiment token has the polarity opposite to the label.
  double noise = 0.1;
  Index embedding_dim = 32;

  /// Throws ConfigError on inconsistent sizes or ratios.
  void validate() const;
};

struct SyntheticTaskSpec {
  int task_id = 0;
  double shared_signal = 0.5;
  Index seq_len = 20;
  Index sentiment_tokens = 4;
  double noise = 0.0;
  Index train_size = 0;
  Index test_size = 0;
  TokenRange neutral;
  TokenRange shared_positive;
  TokenRange shared_negative;
  TokenRange private_positive;
  TokenRange private_negative;
};

/// Frozen token embeddings: one unit-norm row per token.
struct EmbeddingTable {
  Tensor vectors;  // [vocab x d]

  Index vocab_size() const { return vectors.rank() == 2 ? vectors.dim(0) : 0; }
  Index dim() const { return vectors.rank() == 2 ? vectors.dim(1) : 0; }
};

struct TaskFamily {
  std::uint64_t seed = 0;
  FamilyConfig config;
  std::vector<SyntheticTaskSpec> tasks;
  EmbeddingTable embeddings;

  std::size_t size() const { return tasks.size(); }
  const SyntheticTaskSpec& task(int task_id) const;
};

/// Named presets: "hi" (shared_signal 0.9, 6 tasks), "mix" (per-task shared_signal in
/// [0.2, 0.9], 24 tasks) and "lo" (shared_signal 0.2, 6 tasks).
struct Preset {
  std::string name;
  std::size_t tasks = 0;
  FamilyConfig family;
};
Preset preset(std::string_view name);
const std::vector<std::string>& preset_names();

/// Deterministic in (seed, tasks, config). Task ids are 0..tasks-1.
TaskFamily generate_task_family(std::uint64_t seed, std::size_t tasks,
                                const FamilyConfig& config);

enum class Split { kTrain, kTest };
std::string_view split_name(Split split);

struct Example {
  std::vector<int> tokens;
  int label = 0;
  friend bool operator==(const Example&, const Example&) = default;
};

struct Dataset {
  int task_id = 0;
  Split split = Split::kTrain;
  Index seq_len = 0;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
};

/// Exactly size / 2 examples per label, shuffled. Throws ConfigError when size is odd.
Dataset generate_dataset(const SyntheticTaskSpec& task, Split split, Index size,
                         std::uint64_t seed);

/// The train and test sets of a task with seeds derived from the family seed.
Dataset task_dataset(const TaskFamily& family, int task_id, Split split);

/// Embeds the examples at `indices` into a [b x n x d] tensor. Throws VocabError on a token
/// outside the table.
Tensor embed_batch(const Dataset& data, std::span<const std::size_t> indices,
                   const EmbeddingTable& table);

/// Consecutive batches of at most batch_size examples, in dataset order.
std::vector<Tensor> embed(const Dataset& data, const EmbeddingTable& table, Index batch_size);

}  // namespace taskdrop
