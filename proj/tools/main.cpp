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

// taskdrop: experiment runner.
//
//   taskdrop run             --preset lo --seed 1 --out results/lo
//   taskdrop sweep-p         --preset hi --p-grid 0.2,0.4,0.6,0.8,1.0
//   taskdrop compare-dropout --preset lo
//   taskdrop dump-reps       --checkpoint ckpt.json --task 3 --out reps
//   taskdrop gen-data        --preset mix --seed 7 --out data/mix
//
// Exit codes: 0 success, 2 invalid configuration or input, 3 I/O failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "taskdrop/error.hpp"
#include "taskdrop/experiment.hpp"
#include "taskdrop/platform.hpp"
#include "taskdrop/serialization.hpp"

namespace {

using namespace taskdrop;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Options {
  std::string config_path;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> p;
  std::optional<std::size_t> orderings;
  std::vector<double> p_grid;
  bool quiet = false;

  std::string checkpoint;
  int task = -1;
  std::string data;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--preset", o.preset, "task family preset")
      ->check(CLI::IsMember({"hi", "mix", "lo"}));
  cmd->add_option("--seed", o.seed, "run seed (replaces the config's seed list)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--p", o.p, "retention ratio for TaskDrop and StandardDropout");
  cmd->add_option("--orderings", o.orderings, "random task orderings per seed");
  cmd->add_flag("--quiet", o.quiet, "no progress on stderr");
}

ExperimentConfig resolve(const Options& o) {
  Json j = o.config_path.empty() ? Json::object() : read_json(o.config_path);
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  if (o.preset) j["dataset"] = *o.preset;
  if (o.seed) j["seeds"] = std::vector<std::uint64_t>{*o.seed};
  if (o.out) j["out"] = *o.out;
  if (o.p) j["p"] = *o.p;
  if (o.orderings) j["orderings"] = *o.orderings;
  if (!o.p_grid.empty()) j["p_grid"] = o.p_grid;
  return config_from_json(j);
}

Progress reporter(const Options& o) {
  if (o.quiet) return {};
  return [](const RunRecord& r) {
    const std::size_t T = r.matrix.tasks();
    std::fprintf(stderr, "[%s] seed %llu ordering %zu %s", r.dataset.c_str(),
                 static_cast<unsigned long long>(r.seed), r.ordering,
                 std::string(variant_name(r.variant.tag)).c_str());
    if (uses_retention(r.variant.tag) || r.variant.tag == Variant::kStandardDropout) {
      std::fprintf(stderr, " p=%g", r.variant.p);
    }
    std::fprintf(stderr, "  A(T)=%.2f\n", 100.0 * averaged_accuracy(r.matrix, T));
  };
}

void print_rows(const std::vector<SummaryRow>& rows) { std::cout << summary_csv(rows); }

int cmd_run(const Options& o) {
  print_rows(run_experiment(resolve(o), reporter(o)).summary);
  return 0;
}

int cmd_sweep(const Options& o) {
  print_rows(sweep_retention(resolve(o), reporter(o)));
  return 0;
}

int cmd_compare(const Options& o) {
  print_rows(compare_dropout(resolve(o), reporter(o)));
  return 0;
}

int cmd_dump(const Options& o) {
  const Model model = checkpoint_from_json(read_json(o.checkpoint));
  Dataset data;
  if (!o.data.empty()) {
    data = dataset_from_jsonl(read_file(o.data), o.task, Split::kTest);
  } else {
    const ExperimentConfig c = resolve(o);
    const TaskFamily family = generate_task_family(c.seeds.front(), c.tasks, c.family);
    data = task_dataset(family, o.task, Split::kTest);
  }
  const std::filesystem::path dir(o.out.value_or("results"));
  const auto path = dir / ("representations_task" + std::to_string(o.task) + ".jsonl");
  write_file(path, dump_representations(model, o.task, data));
  if (!o.quiet) std::fprintf(stderr, "wrote %zu records to %s\n", data.size(), path.c_str());
  return 0;
}

int cmd_gen(const Options& o) {
  const ExperimentConfig c = resolve(o);
  for (std::uint64_t seed : c.seeds) {
    std::filesystem::path dir(c.out_dir);
    if (c.seeds.size() > 1) dir /= "seed" + std::to_string(seed);
    export_family(generate_task_family(seed, c.tasks, c.family), dir.string());
    if (!o.quiet) std::fprintf(stderr, "wrote %zu tasks to %s\n", c.tasks, dir.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  taskdrop::configure_allocator();
  CLI::App app{"TaskDrop continual-learning experiment runner"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "all configured variants plus the joint reference");
  auto* sweep = app.add_subcommand("sweep-p", "TaskDrop averaged accuracy over a p grid");
  auto* compare = app.add_subcommand("compare-dropout", "TaskDrop vs standard dropout per p");
  auto* dump = app.add_subcommand("dump-reps", "masked final encoder outputs of a checkpoint");
  auto* gen = app.add_subcommand("gen-data", "export a task family as JSON / JSONL");
  for (CLI::App* cmd : {run, sweep, compare, dump, gen}) add_common(cmd, o);
  for (CLI::App* cmd : {sweep, compare}) {
    cmd->add_option("--p-grid", o.p_grid, "comma-separated retention ratios")->delimiter(',');
  }
  dump->add_option("--checkpoint", o.checkpoint, "model checkpoint JSON")
      ->required()
      ->check(CLI::ExistingFile);
  dump->add_option("--task", o.task, "task id")->required();
  dump->add_option("--data", o.data, "dataset JSONL (default: the task's generated test set)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*compare) return cmd_compare(o);
    if (*dump) return cmd_dump(o);
    return cmd_gen(o);
  } catch (const IoError& e) {
    std::cerr << "taskdrop: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "taskdrop: " << e.what() << "\n";
    return kExitConfig;
  }
}
