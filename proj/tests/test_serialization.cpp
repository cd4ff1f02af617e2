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

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>

#include "taskdrop/error.hpp"
#include "taskdrop/serialization.hpp"
#include "taskdrop/trainer.hpp"
#include "test_util.hpp"

namespace taskdrop {
namespace {

using testing::random_tensor;
using testing::small_family;

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("taskdrop_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

TEST(Serialization, TensorRoundTripIsExact) {
  Rng rng(1);
  Tensor t = random_tensor({3, 4}, rng);
  t[0] = 0.1;
  t[1] = std::numeric_limits<double>::denorm_min();
  t[2] = -1e300;
  const Tensor back = tensor_from_json(Json::parse(tensor_to_json(t).dump()));
  EXPECT_EQ(back, t);
  EXPECT_THROW(tensor_from_json(Json::parse(R"({"shape":[2],"data":[1]})")), DataError);
}

TEST(Serialization, RegistryRoundTrip) {
  MaskRegistry reg(12);
  const std::array<Index, 1> widths{10};
  for (int id : {5, 2, 7}) reg.generate(id, widths, 0.4);
  const MaskRegistry back = registry_from_json(Json::parse(registry_to_json(reg).dump()));
  EXPECT_EQ(back.order(), reg.order());
  for (int id : {5, 2, 7}) EXPECT_EQ(back.at(id), reg.at(id));
  EXPECT_EQ(mask_from_json(mask_to_json(reg.at(2))), reg.at(2));
}

TEST(Serialization, CheckpointReproducesForwardPass) {
  const TaskFamily f = generate_task_family(2, 3, small_family(0.5));
  ModelConfig c;
  c.input_dim = 8;
  c.hidden_dim = 12;
  c.update_bias = -1.0;
  c.seed = 4;
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 25;
  for (Variant v : {Variant::kTaskDrop, Variant::kIndividualNetworks, Variant::kClassifyOnly}) {
    Model m(VariantConfig{v, v == Variant::kTaskDrop ? 0.5 : 1.0}, c, f.embeddings.vectors);
    const std::vector<int> order{1, 2, 0};
    run_sequential(m, make_stream(f, order), tc, 3);
    const Model back = checkpoint_from_json(Json::parse(checkpoint_to_json(m).dump()));
    EXPECT_EQ(back.variant(), m.variant());
    EXPECT_EQ(back.config(), m.config());
    EXPECT_EQ(back.tasks(), m.tasks());
    const Dataset test = task_dataset(f, 2, Split::kTest);
    for (int id : order) {
      EXPECT_EQ(back.encoder(id), m.encoder(id));
      EXPECT_EQ(back.head(id), m.head(id));
    }
    const auto a = checkpoint_to_json(back).dump();
    EXPECT_EQ(a, checkpoint_to_json(m).dump());
    EXPECT_EQ(accuracy(back, 2, test), accuracy(m, 2, test));
  }
}

TEST(Serialization, CheckpointFormatChecked) {
  Json j = Json::parse(R"({"format":"something-else"})");
  EXPECT_THROW(checkpoint_from_json(j), DataError);
}

TEST(Serialization, DatasetJsonl) {
  const TaskFamily f = generate_task_family(2, 1, small_family(0.5));
  const Dataset d = task_dataset(f, 0, Split::kTest);
  const std::string text = dataset_to_jsonl(d);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 100);
  const Dataset back = dataset_from_jsonl(text, 0, Split::kTest);
  EXPECT_EQ(back.examples, d.examples);
  EXPECT_EQ(back.seq_len, d.seq_len);
  EXPECT_THROW(dataset_from_jsonl("{\"tokens\":[1,2],\"label\":2}\n", 0, Split::kTest), DataError);
  EXPECT_THROW(dataset_from_jsonl("{\"tokens\":[1,2],\"label\":0}\n{\"tokens\":[1],\"label\":1}\n", 0,
                                  Split::kTest),
               DataError);
  EXPECT_THROW(dataset_from_jsonl("not json\n", 0, Split::kTest), DataError);
}

TEST(Serialization, EmbeddingsAndMatrix) {
  const TaskFamily f = generate_task_family(2, 2, small_family(0.5));
  const Json e = embeddings_to_json(f.embeddings);
  EXPECT_TRUE(e.contains("0"));
  EXPECT_EQ(embeddings_from_json(Json::parse(e.dump())).vectors, f.embeddings.vectors);
  AccuracyMatrix m(3);
  m.set_row(2, {0.25, 0.5});
  m.set_row(3, {0.125, 0.75, 1.0});
  EXPECT_EQ(accuracy_matrix_from_json(Json::parse(accuracy_matrix_to_json(m).dump())), m);
}

TEST(Serialization, FileHelpers) {
  const auto dir = scratch_dir("files");
  const auto path = dir / "nested" / "a.json";
  write_file(path, R"({"x": 1})");
  EXPECT_EQ(read_json(path)["x"], 1);
  EXPECT_THROW(read_file(dir / "missing.json"), IoError);
  write_file(dir / "bad.json", "{");
  EXPECT_THROW(read_json(dir / "bad.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace taskdrop
