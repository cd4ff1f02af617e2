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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "taskdrop/metrics.hpp"
#include "taskdrop/model.hpp"
#include "taskdrop/serialization.hpp"
#include "taskdrop/taskgen.hpp"
#include "taskdrop/trainer.hpp"

namespace taskdrop {

/// Everything that determines an experiment's output files.
struct ExperimentConfig {
  /// Preset name ("hi", "mix", "lo") or "custom".
  std::string dataset = "lo";
  std::size_t tasks = 6;
  FamilyConfig family;
  /// Sequential variants to run. MultiTaskJoint always runs as the reference.
  std::vector<VariantConfig> variants;
  std::vector<std::uint64_t> seeds{1};
  std::size_t orderings = 10;
  TrainConfig train;
  ModelConfig model;
  /// Retention ratios for sweep-p and compare-dropout.
  std::vector<double> p_grid{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::string out_dir = "results";
  bool save_checkpoints = false;

  /// Throws ConfigError.
  void validate() const;
};

/// Tuned defaults of a preset: family, hyperparameters and the preset's reference retention
/// ratio for TaskDrop.
ExperimentConfig preset_config(const std::string& name);
double preset_retention(const std::string& name);

/// Parses the JSON config format. Missing fields keep the defaults of the named dataset
/// preset; unknown fields are a ConfigError. A variant is a name or {"name": .., "p": ..};
/// a bare name takes the top-level "p" (or the preset's).
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& config);

/// Task order k of a seed: a seeded permutation of 0..tasks-1.
std::vector<int> task_ordering(std::uint64_t seed, std::size_t ordering, std::size_t tasks);

/// One sequential (or joint) run.
struct RunRecord {
  std::string dataset;
  std::uint64_t seed = 0;
  std::size_t ordering = 0;
  VariantConfig variant;
  std::vector<int> tasks;
  AccuracyMatrix matrix;
};

Json record_to_json(const RunRecord& record);
RunRecord record_from_json(const Json& j);

/// One line of the summary CSV.
struct SummaryRow {
  std::string dataset;
  VariantConfig variant;
  /// "A" (averaged accuracy) or "rho" (forgetting ratio), both in percent.
  std::string metric;
  /// "2" or "T".
  std::string t_scope;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n_orderings = 0;
};

/// Groups sequential records by variant, pairs every record with the joint record of the
/// same (seed, ordering) for a_J and reduces A and rho at t = 2 and t = T. Rows come in a
/// canonical order and the result does not depend on the order of `records`.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records, double a_random = 0.5);

std::string summary_csv(const std::vector<SummaryRow>& rows);
const SummaryRow& find_row(const std::vector<SummaryRow>& rows, const VariantConfig& variant,
                           const std::string& metric, const std::string& t_scope);

using Progress = std::function<void(const RunRecord&)>;

struct ExperimentResult {
  /// Joint records first within each (seed, ordering), then the variants in config order.
  std::vector<RunRecord> records;
  std::vector<SummaryRow> summary;
};

/// Runs every (seed, ordering): the joint reference at rows {2, T}, then each variant.
/// Pure computation; nothing is written.
ExperimentResult run_grid(const ExperimentConfig& config, const Progress& progress = {});

/// run_grid plus files: config.json, runs.jsonl, summary.csv (and checkpoints/ if enabled).
ExperimentResult run_experiment(const ExperimentConfig& config, const Progress& progress = {});

/// TaskDrop at every p of the grid; writes sweep.csv with one A at T row per p.
std::vector<SummaryRow> sweep_retention(const ExperimentConfig& config,
                                        const Progress& progress = {});

/// TaskDrop and StandardDropout at every p of the grid; writes compare_dropout.csv with a
/// TaskDrop row followed by a StandardDropout row per p.
std::vector<SummaryRow> compare_dropout(const ExperimentConfig& config,
                                        const Progress& progress = {});

/// One {"vector": [...], "label": y} line per example: the masked final encoder output.
std::string dump_representations(const Model& model, int task_id, const Dataset& data);

/// Writes embeddings.json, family.json and task_<id>_<split>.jsonl for every task.
void export_family(const TaskFamily& family, const std::string& out_dir);

}  // namespace taskdrop
