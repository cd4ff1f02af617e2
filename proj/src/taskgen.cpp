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

#include "taskdrop/taskgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "taskdrop/error.hpp"
#include "taskdrop/random.hpp"

namespace taskdrop {

namespace {

constexpr std::uint64_t kEmbeddingTag = 0x656d62;
constexpr std::uint64_t kSignalTag = 0x736967;
constexpr std::uint64_t kDataTag = 0x646174;

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

int pick(const TokenRange& range, Rng& rng) {
  return range.begin + static_cast<int>(rng.below(static_cast<std::size_t>(range.size())));
}

}  // namespace

void FamilyConfig::validate() const {
  if (!in_unit_interval(shared_signal)) throw ConfigError("shared_signal outside [0, 1]");
  if (shared_signal_range) {
    const auto [lo, hi] = *shared_signal_range;
    if (!in_unit_interval(lo) || !in_unit_interval(hi) || lo > hi) {
      throw ConfigError("shared_signal_range must satisfy 0 <= lo <= hi <= 1");
    }
  }
  if (!in_unit_interval(noise)) throw ConfigError("noise outside [0, 1]");
  if (shared_vocab < 0 || shared_vocab % 2 != 0) {
    throw ConfigError("shared_vocab must be even and non-negative (half per polarity)");
  }
  if (private_vocab < 0 || private_vocab % 2 != 0) {
    throw ConfigError("private_vocab must be even and non-negative (half per polarity)");
  }
  const double max_signal = shared_signal_range ? shared_signal_range->second : shared_signal;
  const double min_signal = shared_signal_range ? shared_signal_range->first : shared_signal;
  if (max_signal > 0.0 && shared_vocab == 0) {
    throw ConfigError("shared_signal > 0 needs a non-empty shared lexicon");
  }
  if (min_signal < 1.0 && private_vocab == 0) {
    throw ConfigError("shared_signal < 1 needs a non-empty private lexicon");
  }
  if (neutral_vocab < 1) throw ConfigError("neutral_vocab must be positive");
  if (seq_len < 1) throw ConfigError("seq_len must be positive");
  if (sentiment_tokens < 0 || sentiment_tokens > seq_len) {
    throw ConfigError("sentiment_tokens must lie in [0, seq_len]");
  }
  if (train_size < 2 || train_size % 2 != 0 || test_size < 2 || test_size % 2 != 0) {
    throw ConfigError("train_size and test_size must be even and at least 2");
  }
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be positive");
}

const SyntheticTaskSpec& TaskFamily::task(int task_id) const {
  if (task_id < 0 || static_cast<std::size_t>(task_id) >= tasks.size()) {
    throw LookupError("task " + std::to_string(task_id) + " is not in the family");
  }
  return tasks[static_cast<std::size_t>(task_id)];
}

Preset preset(std::string_view name) {
  Preset p;
  p.name = std::string(name);
  // Small lexicons keep each task's tokens (plus the neutral filler) within the embedding
  // dimension, so every task is learnable from a few hundred examples.
  p.family.shared_vocab = 8;
  p.family.private_vocab = 8;
  p.family.neutral_vocab = 12;
  p.family.seq_len = 12;
  p.family.train_size = 250;
  p.family.test_size = 500;
  if (name == "hi") {
    p.tasks = 6;
    p.family.shared_signal = 0.9;
  } else if (name == "lo") {
    p.tasks = 6;
    p.family.shared_signal = 0.2;
  } else if (name == "mix") {
    p.tasks = 24;
    p.family.shared_signal_range = std::make_pair(0.2, 0.9);
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected hi, mix or lo)");
  }
  return p;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"hi", "mix", "lo"};
  return names;
}

TaskFamily generate_task_family(std::uint64_t seed, std::size_t tasks,
                                const FamilyConfig& config) {
  if (tasks < 1) throw ConfigError("a task family needs at least one task");
  config.validate();
  TaskFamily family;
  family.seed = seed;
  family.config = config;

  const int neutral = static_cast<int>(config.neutral_vocab);
  const int half_shared = static_cast<int>(config.shared_vocab / 2);
  const int half_private = static_cast<int>(config.private_vocab / 2);
  int next = 0;
  const TokenRange neutral_range{next, next + neutral};
  next += neutral;
  const TokenRange shared_pos{next, next + half_shared};
  next += half_shared;
  const TokenRange shared_neg{next, next + half_shared};
  next += half_shared;

  Rng signal_rng(derive_seed(seed, {kSignalTag}));
  for (std::size_t t = 0; t < tasks; ++t) {
    SyntheticTaskSpec spec;
    spec.task_id = static_cast<int>(t);
    spec.shared_signal = config.shared_signal;
    if (config.shared_signal_range) {
      spec.shared_signal =
          signal_rng.uniform(config.shared_signal_range->first, config.shared_signal_range->second);
    }
    spec.seq_len = config.seq_len;
    spec.sentiment_tokens = config.sentiment_tokens;
    spec.noise = config.noise;
    spec.train_size = config.train_size;
    spec.test_size = config.test_size;
    spec.neutral = neutral_range;
    spec.shared_positive = shared_pos;
    spec.shared_negative = shared_neg;
    spec.private_positive = {next, next + half_private};
    next += half_private;
    spec.private_negative = {next, next + half_private};
    next += half_private;
    family.tasks.push_back(spec);
  }

  Rng rng(derive_seed(seed, {kEmbeddingTag}));
  Tensor vectors(Shape{next, config.embedding_dim});
  auto m = vectors.matrix();
  for (Index token = 0; token < next; ++token) {
    for (Index j = 0; j < config.embedding_dim; ++j) m(token, j) = rng.normal();
    m.row(token) /= m.row(token).norm();
  }
  family.embeddings.vectors = std::move(vectors);
  return family;
}

std::string_view split_name(Split split) { return split == Split::kTrain ? "train" : "test"; }

Dataset generate_dataset(const SyntheticTaskSpec& task, Split split, Index size,
                         std::uint64_t seed) {
  if (size < 0 || size % 2 != 0) {
    throw ConfigError("dataset size must be even for an exact label balance, got " +
                      std::to_string(size));
  }
  Rng rng(seed);
  Dataset data;
  data.task_id = task.task_id;
  data.split = split;
  data.seq_len = task.seq_len;
  data.examples.reserve(static_cast<std::size_t>(size));

  std::vector<std::size_t> positions(static_cast<std::size_t>(task.seq_len));
  for (Index i = 0; i < size; ++i) {
    Example ex;
    ex.label = i < size / 2 ? 0 : 1;
    ex.tokens.resize(static_cast<std::size_t>(task.seq_len));
    for (int& tok : ex.tokens) tok = pick(task.neutral, rng);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(positions));
    for (Index k = 0; k < task.sentiment_tokens; ++k) {
      const bool positive = (ex.label == 1) != rng.bernoulli(task.noise);
      const bool shared = rng.bernoulli(task.shared_signal);
      const TokenRange& lexicon =
          shared ? (positive ? task.shared_positive : task.shared_negative)
                 : (positive ? task.private_positive : task.private_negative);
      ex.tokens[positions[static_cast<std::size_t>(k)]] = pick(lexicon, rng);
    }
    data.examples.push_back(std::move(ex));
  }
  rng.shuffle(std::span<Example>(data.examples));
  return data;
}

Dataset task_dataset(const TaskFamily& family, int task_id, Split split) {
  const SyntheticTaskSpec& spec = family.task(task_id);
  const Index size = split == Split::kTrain ? spec.train_size : spec.test_size;
  return generate_dataset(
      spec, split, size,
      derive_seed(family.seed, {kDataTag, static_cast<std::uint64_t>(task_id),
                                static_cast<std::uint64_t>(split)}));
}

Tensor embed_batch(const Dataset& data, std::span<const std::size_t> indices,
                   const EmbeddingTable& table) {
  const Index n = data.seq_len;
  const Index d = table.dim();
  Tensor out(Shape{static_cast<Index>(indices.size()), n, d});
  auto rows = out.matrix();
  const auto vectors = table.vectors.matrix();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Example& ex = data.examples.at(indices[b]);
    if (static_cast<Index>(ex.tokens.size()) != n) {
      throw DataError("example length " + std::to_string(ex.tokens.size()) +
                      " differs from the dataset sequence length " + std::to_string(n));
    }
    for (Index i = 0; i < n; ++i) {
      const int tok = ex.tokens[static_cast<std::size_t>(i)];
      if (tok < 0 || tok >= table.vocab_size()) {
        throw VocabError("token " + std::to_string(tok) + " is not in the embedding table");
      }
      rows.row(static_cast<Index>(b) * n + i) = vectors.row(tok);
    }
  }
  return out;
}

std::vector<Tensor> embed(const Dataset& data, const EmbeddingTable& table, Index batch_size) {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  std::vector<Tensor> batches;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch_size)) {
    idx.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + static_cast<std::size_t>(batch_size)); ++i) {
      idx.push_back(i);
    }
    batches.push_back(embed_batch(data, idx, table));
  }
  return batches;
}

}  // namespace taskdrop
