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

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskdrop/encoder.hpp"
#include "taskdrop/masking.hpp"
#include "taskdrop/random.hpp"
#include "taskdrop/tensor.hpp"

namespace taskdrop {

enum class Variant {
  kTaskDrop,
  kNoMasking,
  kClassifyOnly,
  kIndividualNetworks,
  kMultiTaskJoint,
  kStandardDropout,
};

std::string_view variant_name(Variant v);
/// Throws ConfigError on an unknown name.
Variant parse_variant(std::string_view name);
/// TaskDrop and StandardDropout are the variants parameterized by a retention ratio.
bool uses_retention(Variant v);

struct VariantConfig {
  Variant tag = Variant::kTaskDrop;
  double p = 1.0;

  friend bool operator==(const VariantConfig&, const VariantConfig&) = default;
};

struct ModelConfig {
  Index input_dim = 32;
  Index hidden_dim = 64;
  Index classes = 2;
  double init_scale = 0.08;
  /// Half-width of the uniform init of classifier heads.
  double head_scale = 0.08;
  /// Initial update-gate bias; negative values start the cell close to keeping its state.
  double update_bias = 0.0;
  bool train_embeddings = false;
  std::uint64_t seed = 0;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Fully-connected classifier of one task: logits = y W + b with W [n x C].
struct Head {
  Tensor weight;
  Tensor bias;
  friend bool operator==(const Head&, const Head&) = default;
};

enum class Mode { kTrain, kEval };

/// A batch of token sequences with labels.
struct TokenBatch {
  Index batch = 0;
  Index seq_len = 0;
  std::vector<int> tokens;  // batch * seq_len, sample-major
  std::vector<int> labels;
};

/// Embedding lookup + single-layer GRU + output masking + one linear head per task.
///
/// The variant decides which mask multiplies the encoder outputs and which parameters a task
/// may update:
///   TaskDrop           registry mask of the task, train and eval; shared encoder
///   StandardDropout    fresh per-sample Bernoulli(p) masks scaled by 1/p in training only
///   NoMasking          no mask, shared encoder
///   ClassifyOnly       encoder trained on the first task only, heads afterwards
///   IndividualNetworks a fresh encoder per task
///   MultiTaskJoint     shared encoder, every head, all tasks' data at once
///
/// Heads (and TaskDrop masks, and IndividualNetworks encoders) are created by begin_task()
/// with initializations seeded from (config.seed, task id), so task orderings are comparable.
class Model {
 public:
  Model(VariantConfig variant, ModelConfig config, Tensor embeddings);

  const VariantConfig& variant() const { return variant_; }
  const ModelConfig& config() const { return config_; }

  /// Registers a task on first encounter; later calls are no-ops.
  void begin_task(int task_id);
  bool has_task(int task_id) const { return heads_.count(task_id) != 0; }
  /// Tasks in the order they were begun.
  const std::vector<int>& tasks() const { return task_order_; }

  /// Logits [b x C] for an embedded batch [b x n x d]. Throws LookupError for an unknown
  /// task and RegistryError when a TaskDrop mask is missing. dropout_rng is only read by
  /// StandardDropout in training mode.
  Tensor forward(int task_id, const Tensor& embedded, Mode mode = Mode::kEval,
                 Rng* dropout_rng = nullptr) const;
  Tensor forward(int task_id, const TokenBatch& batch, Mode mode = Mode::kEval,
                 Rng* dropout_rng = nullptr) const;

  /// The masked final encoder output y'_n [b x n_l] in evaluation mode.
  Tensor representations(int task_id, const TokenBatch& batch) const;

  /// Names of the parameters that training task_id may update.
  std::vector<std::string> trainable_params(int task_id) const;

  /// One SGD step on the cross-entropy of the batch. Returns the loss before the update.
  double train_step(int task_id, const TokenBatch& batch, double learning_rate,
                    Rng& dropout_rng);

  /// Every parameter tensor by name (embedding, encoder blocks, heads).
  std::map<std::string, const Tensor*> named_parameters() const;

  const GruParams& encoder(int task_id) const;
  const GruParams& shared_encoder() const { return encoder_; }
  const Head& head(int task_id) const;
  const Tensor& embeddings(int task_id) const;
  const MaskRegistry& masks() const { return masks_; }

  /// Restores state from a checkpoint. Shapes are validated.
  void restore(GruParams shared_encoder, Tensor embeddings, std::map<int, Head> heads,
               std::map<int, GruParams> task_encoders, std::map<int, Tensor> task_embeddings,
               MaskRegistry masks, std::vector<int> task_order);
  const std::map<int, Head>& heads() const { return heads_; }
  const std::map<int, GruParams>& task_encoders() const { return task_encoders_; }
  const std::map<int, Tensor>& task_embeddings() const { return task_embeddings_; }

 private:
  bool encoder_trainable(int task_id) const;
  OutputMask output_mask(int task_id, Index batch, Mode mode, Rng* dropout_rng) const;
  GruParams& mutable_encoder(int task_id);
  Tensor& mutable_embeddings(int task_id);

  VariantConfig variant_;
  ModelConfig config_;
  Tensor embeddings_;
  GruParams encoder_;
  std::map<int, Head> heads_;
  std::map<int, GruParams> task_encoders_;
  std::map<int, Tensor> task_embeddings_;
  MaskRegistry masks_;
  std::vector<int> task_order_;
};

/// Token batch from dataset-independent pieces; used by trainers and tools.
TokenBatch make_batch(std::span<const std::vector<int>> sequences, std::span<const int> labels);

}  // namespace taskdrop
