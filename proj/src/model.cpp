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

#include "taskdrop/model.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "taskdrop/error.hpp"
#include "taskdrop/ops.hpp"

namespace taskdrop {

namespace {

constexpr std::uint64_t kEncoderTag = 0x656e63;
constexpr std::uint64_t kHeadTag = 0x686561;
constexpr std::uint64_t kMaskTag = 0x6d736b;

constexpr std::array<std::pair<Variant, std::string_view>, 6> kVariantNames = {{
    {Variant::kTaskDrop, "TaskDrop"},
    {Variant::kNoMasking, "NoMasking"},
    {Variant::kClassifyOnly, "ClassifyOnly"},
    {Variant::kIndividualNetworks, "IndividualNetworks"},
    {Variant::kMultiTaskJoint, "MultiTaskJoint"},
    {Variant::kStandardDropout, "StandardDropout"},
}};

std::string encoder_prefix(Variant v, int task_id) {
  return v == Variant::kIndividualNetworks ? "encoder[" + std::to_string(task_id) + "]."
                                           : std::string("encoder.");
}

std::string embedding_name(Variant v, int task_id) {
  return v == Variant::kIndividualNetworks ? "embedding[" + std::to_string(task_id) + "]"
                                           : std::string("embedding");
}

std::string head_name(int task_id, std::string_view field) {
  return "head[" + std::to_string(task_id) + "]." + std::string(field);
}

/// Timestep inputs [b x d] looked up from the table, either as constants or through a
/// differentiable gather when the table is a variable.
std::vector<Var> lookup_inputs(Tape& tape, const TokenBatch& batch, const Tensor& table,
                               bool trainable, Var* table_var_out = nullptr) {
  if (static_cast<Index>(batch.tokens.size()) != batch.batch * batch.seq_len) {
    throw ShapeError("token batch holds " + std::to_string(batch.tokens.size()) +
                     " tokens for " + std::to_string(batch.batch) + " x " +
                     std::to_string(batch.seq_len));
  }
  for (int tok : batch.tokens) {
    if (tok < 0 || tok >= table.dim(0)) {
      throw VocabError("token " + std::to_string(tok) + " is not in the embedding table");
    }
  }
  std::vector<Var> inputs;
  inputs.reserve(static_cast<std::size_t>(batch.seq_len));
  std::vector<int> ids(static_cast<std::size_t>(batch.batch));
  const Var table_var = trainable ? tape.variable(table) : Var{};
  if (table_var_out) *table_var_out = table_var;
  const auto rows = table.matrix();
  for (Index i = 0; i < batch.seq_len; ++i) {
    for (Index b = 0; b < batch.batch; ++b) {
      ids[static_cast<std::size_t>(b)] = batch.tokens[static_cast<std::size_t>(b * batch.seq_len + i)];
    }
    if (trainable) {
      inputs.push_back(gather_rows(table_var, ids));
    } else {
      Tensor x(Shape{batch.batch, table.dim(1)});
      auto xm = x.matrix();
      for (Index b = 0; b < batch.batch; ++b) xm.row(b) = rows.row(ids[static_cast<std::size_t>(b)]);
      inputs.push_back(tape.constant(std::move(x)));
    }
  }
  return inputs;
}

}  // namespace

std::string_view variant_name(Variant v) {
  for (const auto& [tag, name] : kVariantNames) {
    if (tag == v) return name;
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (const auto& [tag, n] : kVariantNames) {
    if (n == name) return tag;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

bool uses_retention(Variant v) {
  return v == Variant::kTaskDrop || v == Variant::kStandardDropout;
}

Model::Model(VariantConfig variant, ModelConfig config, Tensor embeddings)
    : variant_(variant),
      config_(config),
      embeddings_(std::move(embeddings)),
      masks_(derive_seed(config.seed, {kMaskTag})) {
  if (!(variant_.p >= 0.0 && variant_.p <= 1.0)) {
    throw DomainError("retention ratio " + std::to_string(variant_.p) + " outside [0, 1]");
  }
  if (variant_.tag == Variant::kStandardDropout && variant_.p == 0.0) {
    throw DomainError("StandardDropout needs p > 0 (outputs are rescaled by 1/p)");
  }
  if (embeddings_.rank() != 2 || embeddings_.dim(1) != config_.input_dim) {
    throw ShapeError("embedding table " + shape_string(embeddings_.shape()) +
                     " does not match input_dim " + std::to_string(config_.input_dim));
  }
  if (config_.hidden_dim < 1 || config_.classes < 2) {
    throw ConfigError("hidden_dim must be positive and classes at least 2");
  }
  Rng rng(derive_seed(config_.seed, {kEncoderTag}));
  encoder_ = GruParams::uniform_init(config_.input_dim, config_.hidden_dim, config_.init_scale, rng,
                                     config_.update_bias);
}

void Model::begin_task(int task_id) {
  if (has_task(task_id)) return;
  Rng head_rng(derive_seed(config_.seed, {kHeadTag, static_cast<std::uint64_t>(task_id)}));
  Head head;
  head.weight = Tensor(Shape{config_.hidden_dim, config_.classes});
  for (Index i = 0; i < head.weight.size(); ++i) {
    head.weight[i] = head_rng.uniform(-config_.head_scale, config_.head_scale);
  }
  head.bias = Tensor(Shape{config_.classes});
  heads_.emplace(task_id, std::move(head));

  if (variant_.tag == Variant::kTaskDrop) {
    const std::array<Index, 1> widths{config_.hidden_dim};
    masks_.generate(task_id, widths, variant_.p);
  }
  if (variant_.tag == Variant::kIndividualNetworks) {
    Rng enc_rng(derive_seed(config_.seed, {kEncoderTag, static_cast<std::uint64_t>(task_id) + 1}));
    task_encoders_.emplace(task_id, GruParams::uniform_init(config_.input_dim, config_.hidden_dim,
                                                            config_.init_scale, enc_rng,
                                                            config_.update_bias));
    if (config_.train_embeddings) task_embeddings_.emplace(task_id, embeddings_);
  }
  task_order_.push_back(task_id);
}

const Head& Model::head(int task_id) const {
  const auto it = heads_.find(task_id);
  if (it == heads_.end()) {
    throw LookupError("no classifier head for task " + std::to_string(task_id));
  }
  return it->second;
}

const GruParams& Model::encoder(int task_id) const {
  if (variant_.tag != Variant::kIndividualNetworks) return encoder_;
  const auto it = task_encoders_.find(task_id);
  if (it == task_encoders_.end()) {
    throw LookupError("no encoder for task " + std::to_string(task_id));
  }
  return it->second;
}

GruParams& Model::mutable_encoder(int task_id) {
  return const_cast<GruParams&>(std::as_const(*this).encoder(task_id));
}

const Tensor& Model::embeddings(int task_id) const {
  if (variant_.tag == Variant::kIndividualNetworks && config_.train_embeddings) {
    const auto it = task_embeddings_.find(task_id);
    if (it == task_embeddings_.end()) {
      throw LookupError("no embedding table for task " + std::to_string(task_id));
    }
    return it->second;
  }
  return embeddings_;
}

Tensor& Model::mutable_embeddings(int task_id) {
  return const_cast<Tensor&>(std::as_const(*this).embeddings(task_id));
}

bool Model::encoder_trainable(int task_id) const {
  if (variant_.tag == Variant::kClassifyOnly) {
    return !task_order_.empty() && task_order_.front() == task_id;
  }
  return true;
}

OutputMask Model::output_mask(int task_id, Index batch, Mode mode, Rng* dropout_rng) const {
  switch (variant_.tag) {
    case Variant::kTaskDrop:
      return masks_.at(task_id).layer_masks.front();
    case Variant::kStandardDropout: {
      if (mode == Mode::kEval) return std::monostate{};
      if (!dropout_rng) throw UsageError("StandardDropout training needs a dropout Rng");
      Tensor factors = dropout_masks(batch, config_.hidden_dim, variant_.p, *dropout_rng);
      factors.flat() *= 1.0 / variant_.p;
      return factors;
    }
    default:
      return std::monostate{};
  }
}

Tensor Model::forward(int task_id, const Tensor& embedded, Mode mode, Rng* dropout_rng) const {
  const Head& h = head(task_id);
  Tape tape;
  const std::vector<Var> inputs = timestep_inputs(tape, embedded);
  const GruVars gv = GruVars::bind(tape, encoder(task_id), false);
  const Index batch = inputs.front().value().rows();
  const GruOutput out = encode_sequence(gv, inputs, output_mask(task_id, batch, mode, dropout_rng));
  const Var logits = add(matmul(out.final_output(), tape.constant(h.weight)), tape.constant(h.bias));
  return logits.value();
}

Tensor Model::forward(int task_id, const TokenBatch& batch, Mode mode, Rng* dropout_rng) const {
  const Head& h = head(task_id);
  Tape tape;
  const std::vector<Var> inputs = lookup_inputs(tape, batch, embeddings(task_id), false);
  const GruVars gv = GruVars::bind(tape, encoder(task_id), false);
  const GruOutput out =
      encode_sequence(gv, inputs, output_mask(task_id, batch.batch, mode, dropout_rng));
  const Var logits = add(matmul(out.final_output(), tape.constant(h.weight)), tape.constant(h.bias));
  return logits.value();
}

Tensor Model::representations(int task_id, const TokenBatch& batch) const {
  head(task_id);
  Tape tape;
  const std::vector<Var> inputs = lookup_inputs(tape, batch, embeddings(task_id), false);
  const GruVars gv = GruVars::bind(tape, encoder(task_id), false);
  const GruOutput out =
      encode_sequence(gv, inputs, output_mask(task_id, batch.batch, Mode::kEval, nullptr));
  return out.final_output().value();
}

std::vector<std::string> Model::trainable_params(int task_id) const {
  std::vector<std::string> names;
  if (encoder_trainable(task_id)) {
    if (config_.train_embeddings) names.push_back(embedding_name(variant_.tag, task_id));
    const std::string prefix = encoder_prefix(variant_.tag, task_id);
    for (std::string_view block : GruParams::kBlockNames) names.push_back(prefix + std::string(block));
  }
  if (variant_.tag == Variant::kMultiTaskJoint) {
    for (const auto& [id, unused] : heads_) {
      names.push_back(head_name(id, "weight"));
      names.push_back(head_name(id, "bias"));
    }
    if (!has_task(task_id)) {
      names.push_back(head_name(task_id, "weight"));
      names.push_back(head_name(task_id, "bias"));
    }
  } else {
    names.push_back(head_name(task_id, "weight"));
    names.push_back(head_name(task_id, "bias"));
  }
  return names;
}

double Model::train_step(int task_id, const TokenBatch& batch, double learning_rate,
                         Rng& dropout_rng) {
  if (!has_task(task_id)) {
    throw LookupError("no classifier head for task " + std::to_string(task_id) +
                      "; call begin_task first");
  }
  const bool train_encoder = encoder_trainable(task_id);
  const bool train_table = train_encoder && config_.train_embeddings;
  Head& h = heads_.at(task_id);

  Tape tape;
  Var table_var;
  const std::vector<Var> inputs =
      lookup_inputs(tape, batch, embeddings(task_id), train_table, &table_var);
  const GruVars gv = GruVars::bind(tape, encoder(task_id), train_encoder);
  const Var w = tape.variable(h.weight);
  const Var b = tape.variable(h.bias);
  const GruOutput out =
      encode_sequence(gv, inputs, output_mask(task_id, batch.batch, Mode::kTrain, &dropout_rng));
  const Var logits = add(matmul(out.final_output(), w), b);
  const Var loss = cross_entropy_logits(logits, batch.labels);
  tape.backward(loss);

  auto step = [learning_rate](Tensor& param, const Tensor& grad) {
    param.flat() -= learning_rate * grad.flat();
  };
  step(h.weight, w.grad());
  step(h.bias, b.grad());
  if (train_encoder) {
    GruParams& enc = mutable_encoder(task_id);
    const auto blocks = enc.blocks();
    const auto vars = gv.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) step(*blocks[i], vars[i].grad());
  }
  if (train_table) step(mutable_embeddings(task_id), table_var.grad());
  return loss.value().item();
}

std::map<std::string, const Tensor*> Model::named_parameters() const {
  std::map<std::string, const Tensor*> out;
  if (variant_.tag == Variant::kIndividualNetworks) {
    for (const auto& [id, enc] : task_encoders_) {
      const auto blocks = enc.blocks();
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        out.emplace(encoder_prefix(variant_.tag, id) + std::string(GruParams::kBlockNames[i]), blocks[i]);
      }
    }
    for (const auto& [id, table] : task_embeddings_) out.emplace(embedding_name(variant_.tag, id), &table);
    if (!config_.train_embeddings) out.emplace("embedding", &embeddings_);
  } else {
    const auto blocks = encoder_.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      out.emplace("encoder." + std::string(GruParams::kBlockNames[i]), blocks[i]);
    }
    out.emplace("embedding", &embeddings_);
  }
  for (const auto& [id, h] : heads_) {
    out.emplace(head_name(id, "weight"), &h.weight);
    out.emplace(head_name(id, "bias"), &h.bias);
  }
  return out;
}

void Model::restore(GruParams shared_encoder, Tensor embeddings, std::map<int, Head> heads,
                    std::map<int, GruParams> task_encoders, std::map<int, Tensor> task_embeddings,
                    MaskRegistry masks, std::vector<int> task_order) {
  shared_encoder.validate();
  if (shared_encoder.input_dim() != config_.input_dim ||
      shared_encoder.hidden_dim() != config_.hidden_dim) {
    throw ShapeError("checkpoint encoder does not match the model configuration");
  }
  for (const auto& [id, enc] : task_encoders) enc.validate();
  for (const auto& [id, h] : heads) {
    if (h.weight.shape() != Shape{config_.hidden_dim, config_.classes} ||
        h.bias.shape() != Shape{config_.classes}) {
      throw ShapeError("checkpoint head " + std::to_string(id) + " has the wrong shape");
    }
  }
  encoder_ = std::move(shared_encoder);
  embeddings_ = std::move(embeddings);
  heads_ = std::move(heads);
  task_encoders_ = std::move(task_encoders);
  task_embeddings_ = std::move(task_embeddings);
  masks_ = std::move(masks);
  task_order_ = std::move(task_order);
}

TokenBatch make_batch(std::span<const std::vector<int>> sequences, std::span<const int> labels) {
  if (sequences.size() != labels.size()) throw ShapeError("sequences and labels differ in count");
  TokenBatch batch;
  batch.batch = static_cast<Index>(sequences.size());
  batch.seq_len = sequences.empty() ? 0 : static_cast<Index>(sequences.front().size());
  batch.tokens.reserve(static_cast<std::size_t>(batch.batch * batch.seq_len));
  for (const auto& seq : sequences) {
    if (static_cast<Index>(seq.size()) != batch.seq_len) throw ShapeError("ragged token batch");
    batch.tokens.insert(batch.tokens.end(), seq.begin(), seq.end());
  }
  batch.labels.assign(labels.begin(), labels.end());
  return batch;
}

}  // namespace taskdrop
