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

#include <filesystem>
#include <string>

#include <json.hpp>

#include "taskdrop/masking.hpp"
#include "taskdrop/metrics.hpp"
#include "taskdrop/model.hpp"
#include "taskdrop/taskgen.hpp"

// JSON / JSONL formats. Doubles are written in shortest round-trip form, so every
// save/load pair below reproduces the saved values bit for bit.
namespace taskdrop {

using Json = nlohmann::ordered_json;

Json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const Json& j);

/// {"task_id": id, "p": p, "layer_masks": [[0, 1, ...], ...]}
Json mask_to_json(const TaskMask& mask);
TaskMask mask_from_json(const Json& j);

/// {"seed": s, "masks": [mask, ...]} in generation order.
Json registry_to_json(const MaskRegistry& registry);
MaskRegistry registry_from_json(const Json& j);

/// Complete model state: variant, configuration, embedding table, encoders, heads, masks.
Json checkpoint_to_json(const Model& model);
Model checkpoint_from_json(const Json& j);

/// One {"tokens": [ids], "label": 0|1} object per line.
std::string dataset_to_jsonl(const Dataset& data);
Dataset dataset_from_jsonl(const std::string& text, int task_id, Split split);

/// {"<token id>": [floats], ...} in token order.
Json embeddings_to_json(const EmbeddingTable& table);
EmbeddingTable embeddings_from_json(const Json& j);

Json accuracy_matrix_to_json(const AccuracyMatrix& m);
AccuracyMatrix accuracy_matrix_from_json(const Json& j);

/// File helpers. Throw IoError on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);
Json read_json(const std::filesystem::path& path);

}  // namespace taskdrop
