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

#include "taskdrop/serialization.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "taskdrop/error.hpp"

namespace taskdrop {

namespace {

Json gru_to_json(const GruParams& p) {
  Json j = Json::object();
  const auto blocks = p.blocks();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    j[std::string(GruParams::kBlockNames[i])] = tensor_to_json(*blocks[i]);
  }
  return j;
}

GruParams gru_from_json(const Json& j) {
  GruParams p;
  const auto blocks = p.blocks();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    *blocks[i] = tensor_from_json(j.at(std::string(GruParams::kBlockNames[i])));
  }
  p.validate();
  return p;
}

template <typename Fn>
auto parse_guard(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

Json tensor_to_json(const Tensor& t) {
  return Json{{"shape", t.shape()}, {"data", t.values()}};
}

Tensor tensor_from_json(const Json& j) {
  return parse_guard("tensor", [&] {
    Shape shape = j.at("shape").get<Shape>();
    std::vector<double> data = j.at("data").get<std::vector<double>>();
    if (static_cast<Index>(data.size()) != shape_size(shape)) {
      throw DataError("tensor data holds " + std::to_string(data.size()) + " values for shape " +
                      shape_string(shape));
    }
    return Tensor(std::move(shape), std::move(data));
  });
}

Json mask_to_json(const TaskMask& mask) {
  Json layers = Json::array();
  for (const BinaryMask& m : mask.layer_masks) {
    Json row = Json::array();
    for (std::uint8_t bit : m) row.push_back(static_cast<int>(bit));
    layers.push_back(std::move(row));
  }
  return Json{{"task_id", mask.task_id}, {"p", mask.p}, {"layer_masks", std::move(layers)}};
}

TaskMask mask_from_json(const Json& j) {
  return parse_guard("task mask", [&] {
    TaskMask mask;
    mask.task_id = j.at("task_id").get<int>();
    mask.p = j.at("p").get<double>();
    for (const Json& row : j.at("layer_masks")) {
      BinaryMask m;
      for (const Json& bit : row) {
        const int v = bit.get<int>();
        if (v != 0 && v != 1) throw DataError("mask entries must be 0 or 1");
        m.push_back(static_cast<std::uint8_t>(v));
      }
      mask.layer_masks.push_back(std::move(m));
    }
    return mask;
  });
}

Json registry_to_json(const MaskRegistry& registry) {
  Json masks = Json::array();
  for (int id : registry.order()) masks.push_back(mask_to_json(registry.at(id)));
  return Json{{"seed", registry.seed()}, {"masks", std::move(masks)}};
}

MaskRegistry registry_from_json(const Json& j) {
  return parse_guard("mask registry", [&] {
    MaskRegistry registry(j.at("seed").get<std::uint64_t>());
    for (const Json& m : j.at("masks")) registry.insert(mask_from_json(m));
    return registry;
  });
}

Json checkpoint_to_json(const Model& model) {
  const ModelConfig& c = model.config();
  Json heads = Json::array();
  for (const auto& [id, h] : model.heads()) {
    heads.push_back(Json{{"task_id", id},
                         {"weight", tensor_to_json(h.weight)},
                         {"bias", tensor_to_json(h.bias)}});
  }
  Json encoders = Json::array();
  for (const auto& [id, enc] : model.task_encoders()) {
    encoders.push_back(Json{{"task_id", id}, {"params", gru_to_json(enc)}});
  }
  Json tables = Json::array();
  for (const auto& [id, table] : model.task_embeddings()) {
    tables.push_back(Json{{"task_id", id}, {"table", tensor_to_json(table)}});
  }
  return Json{
      {"format", "taskdrop-checkpoint-1"},
      {"variant", std::string(variant_name(model.variant().tag))},
      {"p", model.variant().p},
      {"model",
       {{"input_dim", c.input_dim},
        {"hidden_dim", c.hidden_dim},
        {"classes", c.classes},
        {"init_scale", c.init_scale},
        {"head_scale", c.head_scale},
        {"update_bias", c.update_bias},
        {"train_embeddings", c.train_embeddings},
        {"seed", c.seed}}},
      {"task_order", model.tasks()},
      {"embeddings", tensor_to_json(model.embeddings(model.tasks().empty() ? 0 : model.tasks().front()))},
      {"encoder", gru_to_json(model.shared_encoder())},
      {"heads", std::move(heads)},
      {"task_encoders", std::move(encoders)},
      {"task_embeddings", std::move(tables)},
      {"masks", registry_to_json(model.masks())},
  };
}

Model checkpoint_from_json(const Json& j) {
  return parse_guard("checkpoint", [&] {
    if (j.at("format") != "taskdrop-checkpoint-1") throw DataError("not a taskdrop checkpoint");
    const Json& mc = j.at("model");
    ModelConfig c;
    c.input_dim = mc.at("input_dim").get<Index>();
    c.hidden_dim = mc.at("hidden_dim").get<Index>();
    c.classes = mc.at("classes").get<Index>();
    c.init_scale = mc.at("init_scale").get<double>();
    c.head_scale = mc.at("head_scale").get<double>();
    c.update_bias = mc.at("update_bias").get<double>();
    c.train_embeddings = mc.at("train_embeddings").get<bool>();
    c.seed = mc.at("seed").get<std::uint64_t>();
    const VariantConfig v{parse_variant(j.at("variant").get<std::string>()), j.at("p").get<double>()};
    Tensor embeddings = tensor_from_json(j.at("embeddings"));
    Model model(v, c, embeddings);
    std::map<int, Head> heads;
    for (const Json& h : j.at("heads")) {
      heads.emplace(h.at("task_id").get<int>(),
                    Head{tensor_from_json(h.at("weight")), tensor_from_json(h.at("bias"))});
    }
    std::map<int, GruParams> encoders;
    for (const Json& e : j.at("task_encoders")) {
      encoders.emplace(e.at("task_id").get<int>(), gru_from_json(e.at("params")));
    }
    std::map<int, Tensor> tables;
    for (const Json& t : j.at("task_embeddings")) {
      tables.emplace(t.at("task_id").get<int>(), tensor_from_json(t.at("table")));
    }
    model.restore(gru_from_json(j.at("encoder")), std::move(embeddings), std::move(heads),
                  std::move(encoders), std::move(tables), registry_from_json(j.at("masks")),
                  j.at("task_order").get<std::vector<int>>());
    return model;
  });
}

std::string dataset_to_jsonl(const Dataset& data) {
  std::string out;
  for (const Example& ex : data.examples) {
    out += Json{{"tokens", ex.tokens}, {"label", ex.label}}.dump();
    out += '\n';
  }
  return out;
}

Dataset dataset_from_jsonl(const std::string& text, int task_id, Split split) {
  Dataset data;
  data.task_id = task_id;
  data.split = split;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Example ex = parse_guard("dataset line", [&] {
      const Json j = Json::parse(line);
      return Example{j.at("tokens").get<std::vector<int>>(), j.at("label").get<int>()};
    });
    if (ex.label != 0 && ex.label != 1) {
      throw DataError("line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    if (data.examples.empty()) {
      data.seq_len = static_cast<Index>(ex.tokens.size());
    } else if (static_cast<Index>(ex.tokens.size()) != data.seq_len) {
      throw DataError("line " + std::to_string(line_no) + ": sequence length differs");
    }
    data.examples.push_back(std::move(ex));
  }
  return data;
}

Json embeddings_to_json(const EmbeddingTable& table) {
  Json j = Json::object();
  const auto m = table.vectors.matrix();
  for (Index token = 0; token < table.vocab_size(); ++token) {
    std::vector<double> row(m.row(token).begin(), m.row(token).end());
    j[std::to_string(token)] = std::move(row);
  }
  return j;
}

EmbeddingTable embeddings_from_json(const Json& j) {
  return parse_guard("embedding table", [&] {
    std::map<int, std::vector<double>> rows;
    for (const auto& [key, value] : j.items()) {
      rows.emplace(std::stoi(key), value.get<std::vector<double>>());
    }
    if (rows.empty()) throw DataError("empty embedding table");
    const auto dim = static_cast<Index>(rows.begin()->second.size());
    const auto vocab = static_cast<Index>(rows.size());
    Tensor vectors(Shape{vocab, dim});
    Index expected = 0;
    for (const auto& [token, row] : rows) {
      if (token != expected) throw DataError("embedding table token ids must be 0..V-1");
      if (static_cast<Index>(row.size()) != dim) throw DataError("ragged embedding table");
      for (Index c = 0; c < dim; ++c) vectors.at(token, c) = row[static_cast<std::size_t>(c)];
      ++expected;
    }
    return EmbeddingTable{std::move(vectors)};
  });
}

Json accuracy_matrix_to_json(const AccuracyMatrix& m) { return Json(m.rows()); }

AccuracyMatrix accuracy_matrix_from_json(const Json& j) {
  return parse_guard("accuracy matrix", [&] {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    AccuracyMatrix m(rows.size());
    for (std::size_t t = 1; t <= rows.size(); ++t) {
      if (!rows[t - 1].empty()) m.set_row(t, rows[t - 1]);
    }
    return m;
  });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw IoError("failed writing " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace taskdrop
