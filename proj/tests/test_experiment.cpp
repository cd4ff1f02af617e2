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
#include <bit>
#include <cstdint>
#include <cmath>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "taskdrop/error.hpp"
#include "taskdrop/experiment.hpp"
#include "taskdrop/serialization.hpp"

namespace taskdrop {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("taskdrop_exp_" + name);
  fs::remove_all(dir);
  return dir;
}

// A tiny custom family: three short tasks, two orderings.
Json tiny_json(const fs::path& out) {
  Json j = Json::parse(R"({
    "dataset": "custom", "tasks": 3, "orderings": 2, "seeds": [3],
    "family": {"shared_signal": 0.5, "shared_vocab": 8, "private_vocab": 8, "neutral_vocab": 20,
               "seq_len": 6, "sentiment_tokens": 2, "train_size": 100, "test_size": 40,
               "noise": 0.0, "embedding_dim": 6},
    "train": {"epochs": 4, "batch_size": 20, "learning_rate": 0.5},
    "model": {"hidden_dim": 8, "update_bias": -1.0},
    "p_grid": [0.5, 1.0]
  })");
  j["out"] = out.string();
  return j;
}

std::string slurp(const fs::path& p) { return read_file(p); }

TEST(Config, StrictParsing) {
  const Json base = tiny_json("x");
  EXPECT_NO_THROW(config_from_json(base));
  for (const char* bad : {R"({"colour": 1})", R"({"train": {"momentum": 0.9}})",
                          R"({"family": {"vocab": 3}})", R"({"dataset": "medium"})",
                          R"({"variants": ["MultiTaskJoint"]})", R"({"variants": ["Dropout"]})",
                          R"({"variants": [{"name": "TaskDrop", "p": 0}]})",
                          R"({"variants": ["NoMasking", "NoMasking"]})", R"({"orderings": 0})",
                          R"({"p_grid": [1.5]})", R"({"tasks": "six"})", R"({"seeds": []})"}) {
    Json j = base;
    j.update(Json::parse(bad), true);
    EXPECT_THROW(config_from_json(j), ConfigError) << bad;
  }
}

TEST(Config, PresetDefaultsAndRoundTrip) {
  const ExperimentConfig lo = config_from_json(Json::parse(R"({"dataset": "lo"})"));
  EXPECT_EQ(lo.tasks, 6u);
  EXPECT_EQ(lo.orderings, 10u);
  EXPECT_EQ(lo.variants.front(), (VariantConfig{Variant::kTaskDrop, preset_retention("lo")}));
  const ExperimentConfig p = config_from_json(Json::parse(R"({"dataset": "hi", "p": 0.3})"));
  EXPECT_EQ(p.variants.front().p, 0.3);
  const ExperimentConfig c = config_from_json(tiny_json("y"));
  EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))), config_to_json(c));
}

TEST(Ordering, SeededPermutations) {
  const std::vector<int> a = task_ordering(1, 0, 6);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(task_ordering(1, 0, 6), a);
  EXPECT_NE(task_ordering(1, 1, 6), a);
}

TEST(Experiment, RetentionOneReproducesNoMasking) {
  Json j = tiny_json(scratch("reduce"));
  j["variants"] = Json::parse(R"([{"name": "TaskDrop", "p": 1.0}, "NoMasking"])");
  const ExperimentResult r = run_grid(config_from_json(j));
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(r.records[3 * k + 1].matrix, r.records[3 * k + 2].matrix);
  }
  for (const std::string metric : {"A", "rho"}) {
    for (const std::string scope : {"2", "T"}) {
      const SummaryRow& a = find_row(r.summary, {Variant::kTaskDrop, 1.0}, metric, scope);
      const SummaryRow& b = find_row(r.summary, {Variant::kNoMasking, 1.0}, metric, scope);
      EXPECT_EQ(std::bit_cast<std::uint64_t>(a.mean), std::bit_cast<std::uint64_t>(b.mean));
      EXPECT_EQ(std::bit_cast<std::uint64_t>(a.std), std::bit_cast<std::uint64_t>(b.std));
    }
  }
}

TEST(Experiment, OutputsAreByteIdenticalAcrossReruns) {
  const fs::path a = scratch("rerun_a");
  const fs::path b = scratch("rerun_b");
  Json ja = tiny_json(a), jb = tiny_json(b);
  ja["save_checkpoints"] = jb["save_checkpoints"] = true;
  run_experiment(config_from_json(ja));
  run_experiment(config_from_json(jb));
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    if (rel == "config.json") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_GE(files, 3u);
  EXPECT_TRUE(fs::exists(a / "checkpoints" / "TaskDrop_p0.6_seed3_ord0.json"));
}

TEST(Experiment, SummaryRecomputedFromRunsFile) {
  const fs::path dir = scratch("summary");
  const ExperimentResult r = run_experiment(config_from_json(tiny_json(dir)));
  std::vector<RunRecord> records;
  std::istringstream lines(slurp(dir / "runs.jsonl"));
  for (std::string line; std::getline(lines, line);) records.push_back(record_from_json(Json::parse(line)));
  ASSERT_EQ(records.size(), r.records.size());
  EXPECT_EQ(summary_csv(summarize(records)), slurp(dir / "summary.csv"));

  // Independent reduction of A at T for NoMasking.
  std::vector<double> values;
  for (const RunRecord& rec : records) {
    if (rec.variant.tag != Variant::kNoMasking) continue;
    const std::vector<double>& row = rec.matrix.row(3);
    double s = 0.0;
    for (double v : row) s += v;
    values.push_back(100.0 * s / 3.0);
  }
  ASSERT_EQ(values.size(), 2u);
  const double mean = 0.5 * (values[0] + values[1]);
  const double sd = std::abs(values[0] - values[1]) / std::sqrt(2.0);
  const SummaryRow& row = find_row(r.summary, {Variant::kNoMasking, 1.0}, "A", "T");
  EXPECT_NEAR(row.mean, mean, 1e-9);
  EXPECT_NEAR(row.std, sd, 1e-9);
  EXPECT_EQ(row.n_orderings, 2u);

  const SummaryRow& joint = find_row(r.summary, {Variant::kMultiTaskJoint, 1.0}, "rho", "T");
  EXPECT_EQ(joint.mean, 0.0);
  EXPECT_THROW(find_row(r.summary, {Variant::kStandardDropout, 0.5}, "A", "T"), LookupError);
}

TEST(Experiment, ReducerIgnoresRecordOrder) {
  const ExperimentResult r = run_grid(config_from_json(tiny_json(scratch("order"))));
  std::vector<RunRecord> shuffled = r.records;
  std::mt19937 gen(5);
  std::shuffle(shuffled.begin(), shuffled.end(), gen);
  EXPECT_EQ(summary_csv(summarize(shuffled)), summary_csv(r.summary));
}

TEST(Experiment, CompareDropoutRows) {
  const fs::path dir = scratch("compare");
  Json j = tiny_json(dir);
  j["orderings"] = 1;
  const std::vector<SummaryRow> rows = compare_dropout(config_from_json(j));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].variant, (VariantConfig{Variant::kTaskDrop, 0.5}));
  EXPECT_EQ(rows[1].variant, (VariantConfig{Variant::kStandardDropout, 0.5}));
  EXPECT_EQ(rows[2].mean, rows[3].mean);
  EXPECT_TRUE(fs::exists(dir / "compare_dropout.csv"));

  j["variants"] = Json::parse(R"(["NoMasking"])");
  const ExperimentResult plain = run_grid(config_from_json(j));
  EXPECT_EQ(find_row(plain.summary, {Variant::kNoMasking, 1.0}, "A", "T").mean, rows[2].mean);
}

TEST(Experiment, SingleValueSweep) {
  const fs::path dir = scratch("sweep");
  Json j = tiny_json(dir);
  j["p_grid"] = Json::array({0.7});
  j["orderings"] = 1;
  const std::vector<SummaryRow> rows = sweep_retention(config_from_json(j));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].variant, (VariantConfig{Variant::kTaskDrop, 0.7}));
  const std::string csv = slurp(dir / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Representations, OneLinePerExample) {
  const ExperimentConfig c = config_from_json(tiny_json(scratch("reps")));
  const TaskFamily f = generate_task_family(3, c.tasks, c.family);
  ModelConfig mc = c.model;
  mc.seed = 1;
  Model m(VariantConfig{Variant::kTaskDrop, 0.5}, mc, f.embeddings.vectors);
  m.begin_task(1);
  const Dataset test = task_dataset(f, 1, Split::kTest);
  const std::string out = dump_representations(m, 1, test);
  EXPECT_EQ(out, dump_representations(m, 1, test));
  std::istringstream lines(out);
  std::size_t n = 0;
  const BinaryMask& mask = m.masks().at(1).layer_masks.front();
  for (std::string line; std::getline(lines, line); ++n) {
    const Json rec = Json::parse(line);
    const auto v = rec.at("vector").get<std::vector<double>>();
    ASSERT_EQ(v.size(), 8u);
    for (std::size_t u = 0; u < v.size(); ++u) {
      if (!mask[u]) {
        EXPECT_EQ(v[u], 0.0);
      }
    }
    EXPECT_EQ(rec.at("label").get<int>(), test.examples[n].label);
  }
  EXPECT_EQ(n, test.size());
  EXPECT_THROW(dump_representations(m, 2, test), LookupError);
}

TEST(ExportFamily, WritesEveryTask) {
  const fs::path dir = scratch("export");
  const ExperimentConfig c = config_from_json(tiny_json(dir));
  const TaskFamily f = generate_task_family(3, c.tasks, c.family);
  export_family(f, dir.string());
  EXPECT_EQ(embeddings_from_json(read_json(dir / "embeddings.json")).vectors, f.embeddings.vectors);
  for (int t = 0; t < 3; ++t) {
    const Dataset back = dataset_from_jsonl(slurp(dir / ("task_" + std::to_string(t) + "_train.jsonl")), t, Split::kTrain);
    EXPECT_EQ(back.examples, task_dataset(f, t, Split::kTrain).examples);
  }
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TASKDROP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  write_file(dir / "bad.json", R"({"colour": 1})");
  write_file(dir / "tiny.json", tiny_json(dir / "out").dump());
  EXPECT_EQ(run_cli("gen-data --config " + (dir / "tiny.json").string() + " --out " + (dir / "data").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "data" / "task_2_test.jsonl"));
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(run_cli("run --preset medium"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  fs::create_directories(dir / "blocker");
  write_file(dir / "blocker" / "file", "x");
  EXPECT_EQ(run_cli("gen-data --config " + (dir / "tiny.json").string() + " --out " +
                    (dir / "blocker" / "file" / "sub").string()),
            3);
}

}  // namespace
}  // namespace taskdrop
