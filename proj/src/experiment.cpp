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

#include "taskdrop/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <utility>

#include "taskdrop/error.hpp"

namespace taskdrop {

namespace {

constexpr std::uint64_t kOrderTag = 0x6f7264;
constexpr std::uint64_t kModelTag = 0x6d646c;

// Variants whose output depends on p; the others report p as null.
bool keeps_p(Variant v) { return uses_retention(v) || v == Variant::kStandardDropout; }

VariantConfig canonical(VariantConfig v) {
  if (!keeps_p(v.tag)) v.p = 1.0;
  return v;
}

std::string format_fixed(double value, int decimals) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
  std::string s(buffer);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string format_p(const VariantConfig& v) {
  if (!keeps_p(v.tag)) return "";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%g", v.p);
  return buffer;
}

void check_keys(const Json& j, const char* what, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return key == k; });
    if (!known) throw ConfigError("unknown field '" + key + "' in " + what);
  }
}

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

void read_family(const Json& j, FamilyConfig& f) {
  check_keys(j, "family", {"shared_signal", "shared_signal_range", "shared_vocab",
                           "private_vocab", "neutral_vocab", "seq_len", "sentiment_tokens",
                           "train_size", "test_size", "noise", "embedding_dim"});
  read_field(j, "shared_signal", f.shared_signal);
  if (j.contains("shared_signal_range")) {
    const Json& r = j.at("shared_signal_range");
    if (r.is_null()) {
      f.shared_signal_range.reset();
    } else {
      std::vector<double> range;
      read_field(j, "shared_signal_range", range);
      if (range.size() != 2) throw ConfigError("shared_signal_range needs [lo, hi]");
      f.shared_signal_range = std::make_pair(range[0], range[1]);
    }
  }
  read_field(j, "shared_vocab", f.shared_vocab);
  read_field(j, "private_vocab", f.private_vocab);
  read_field(j, "neutral_vocab", f.neutral_vocab);
  read_field(j, "seq_len", f.seq_len);
  read_field(j, "sentiment_tokens", f.sentiment_tokens);
  read_field(j, "train_size", f.train_size);
  read_field(j, "test_size", f.test_size);
  read_field(j, "noise", f.noise);
  read_field(j, "embedding_dim", f.embedding_dim);
}

Json family_to_json(const FamilyConfig& f) {
  Json range = nullptr;
  if (f.shared_signal_range) range = {f.shared_signal_range->first, f.shared_signal_range->second};
  return Json{{"shared_signal", f.shared_signal},
              {"shared_signal_range", range},
              {"shared_vocab", f.shared_vocab},
              {"private_vocab", f.private_vocab},
              {"neutral_vocab", f.neutral_vocab},
              {"seq_len", f.seq_len},
              {"sentiment_tokens", f.sentiment_tokens},
              {"train_size", f.train_size},
              {"test_size", f.test_size},
              {"noise", f.noise},
              {"embedding_dim", f.embedding_dim}};
}

VariantConfig read_variant(const Json& j, double default_p) {
  if (j.is_string()) {
    const Variant tag = parse_variant(j.get<std::string>());
    return canonical(VariantConfig{tag, keeps_p(tag) ? default_p : 1.0});
  }
  check_keys(j, "variant", {"name", "p"});
  if (!j.contains("name")) throw ConfigError("variant object needs a name");
  std::string name;
  double p = default_p;
  read_field(j, "name", name);
  read_field(j, "p", p);
  return canonical(VariantConfig{parse_variant(name), p});
}

Json variant_p_json(const VariantConfig& v) {
  return keeps_p(v.tag) ? Json(v.p) : Json(nullptr);
}

std::tuple<int, double> variant_key(const VariantConfig& v) {
  return {static_cast<int>(v.tag), v.p};
}

std::string checkpoint_name(const RunRecord& r) {
  std::string name(variant_name(r.variant.tag));
  if (keeps_p(r.variant.tag)) name += "_p" + format_p(r.variant);
  return name + "_seed" + std::to_string(r.seed) + "_ord" + std::to_string(r.ordering) + ".json";
}

std::string records_jsonl(const std::vector<RunRecord>& records) {
  std::string out;
  for (const RunRecord& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_outputs(const ExperimentConfig& config, const std::string& csv_name,
                   const std::string& csv, const std::vector<RunRecord>& records) {
  const std::filesystem::path dir(config.out_dir);
  write_file(dir / "config.json", config_to_json(config).dump(2) + "\n");
  write_file(dir / "runs.jsonl", records_jsonl(records));
  write_file(dir / csv_name, csv);
}

ExperimentResult run_grid_impl(const ExperimentConfig& config, const Progress& progress,
                               std::map<std::string, std::string>* checkpoints) {
  config.validate();
  ExperimentResult result;
  const std::size_t T = config.tasks;
  std::vector<std::size_t> joint_rows{std::min<std::size_t>(2, T), T};
  for (std::uint64_t seed : config.seeds) {
    const TaskFamily family = generate_task_family(seed, T, config.family);
    ModelConfig model_config = config.model;
    model_config.seed = derive_seed(seed, {kModelTag});
    for (std::size_t k = 0; k < config.orderings; ++k) {
      const std::vector<int> order = task_ordering(seed, k, T);
      const TaskStream stream = make_stream(family, order);

      RunRecord joint{config.dataset, seed, k, VariantConfig{Variant::kMultiTaskJoint, 1.0}, order,
                      run_joint(model_config, family.embeddings.vectors, stream, config.train,
                                model_config.seed, joint_rows)};
      if (progress) progress(joint);
      result.records.push_back(std::move(joint));

      for (const VariantConfig& v : config.variants) {
        Model model(v, model_config, family.embeddings.vectors);
        RunRecord record{config.dataset, seed, k, v, order,
                         run_sequential(model, stream, config.train, model_config.seed)};
        if (checkpoints) {
          (*checkpoints)[checkpoint_name(record)] = checkpoint_to_json(model).dump() + "\n";
        }
        if (progress) progress(record);
        result.records.push_back(std::move(record));
      }
    }
  }
  result.summary = summarize(result.records);
  return result;
}

ExperimentConfig with_variants(const ExperimentConfig& config, std::vector<VariantConfig> variants) {
  ExperimentConfig c = config;
  c.variants = std::move(variants);
  return c;
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("p_grid is empty");
  for (double p : grid) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p_grid values must lie in (0, 1]");
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (tasks < 1) throw ConfigError("tasks must be at least 1");
  family.validate();
  train.validate();
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (orderings < 1) throw ConfigError("orderings must be at least 1");
  if (model.hidden_dim < 1) throw ConfigError("hidden_dim must be positive");
  if (!(model.init_scale > 0.0)) throw ConfigError("init_scale must be positive");
  if (!(model.head_scale > 0.0)) throw ConfigError("head_scale must be positive");
  if (model.input_dim != family.embedding_dim) {
    throw ConfigError("model input_dim must equal the family embedding_dim");
  }
  std::set<std::tuple<int, double>> seen;
  for (const VariantConfig& v : variants) {
    if (v.tag == Variant::kMultiTaskJoint) {
      throw ConfigError("MultiTaskJoint always runs as the reference; do not list it");
    }
    if (keeps_p(v.tag) && !(v.p > 0.0 && v.p <= 1.0)) {
      throw ConfigError(std::string(variant_name(v.tag)) + " needs p in (0, 1]");
    }
    if (!seen.insert(variant_key(v)).second) {
      throw ConfigError("variant " + std::string(variant_name(v.tag)) + " listed twice");
    }
  }
  for (double p : p_grid) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p_grid values must lie in (0, 1]");
  }
  if (out_dir.empty()) throw ConfigError("out_dir is empty");
}

double preset_retention(const std::string& name) {
  if (name == "hi") return 0.8;
  if (name == "mix") return 0.5;
  if (name == "lo") return 0.6;
  throw ConfigError("unknown preset '" + name + "' (expected hi, mix or lo)");
}

ExperimentConfig preset_config(const std::string& name) {
  const Preset p = preset(name);
  ExperimentConfig c;
  c.dataset = p.name;
  c.tasks = p.tasks;
  c.family = p.family;
  c.model.input_dim = c.family.embedding_dim;
  c.model.hidden_dim = 128;
  c.model.update_bias = -2.0;
  c.model.head_scale = 0.3;
  c.train.epochs = 10;
  c.train.batch_size = 16;
  c.train.learning_rate = 0.1;
  const double r = preset_retention(name);
  c.variants = {VariantConfig{Variant::kTaskDrop, r}, VariantConfig{Variant::kNoMasking, 1.0},
                VariantConfig{Variant::kClassifyOnly, 1.0},
                VariantConfig{Variant::kIndividualNetworks, 1.0}};
  return c;
}

ExperimentConfig config_from_json(const Json& j) {
  check_keys(j, "config", {"dataset", "tasks", "family", "variants", "p", "seeds", "orderings",
                           "train", "model", "p_grid", "out", "save_checkpoints"});
  std::string dataset = "lo";
  read_field(j, "dataset", dataset);
  ExperimentConfig c;
  double p = 0.6;
  if (dataset == "custom") {
    c.dataset = "custom";
    c.variants = {VariantConfig{Variant::kTaskDrop, p}, VariantConfig{Variant::kNoMasking, 1.0}};
  } else {
    c = preset_config(dataset);
    p = preset_retention(dataset);
  }
  read_field(j, "p", p);
  read_field(j, "tasks", c.tasks);
  if (j.contains("family")) read_family(j.at("family"), c.family);
  if (j.contains("variants")) {
    const Json& vs = j.at("variants");
    if (!vs.is_array()) throw ConfigError("variants must be an array");
    c.variants.clear();
    for (const Json& v : vs) c.variants.push_back(read_variant(v, p));
  } else if (j.contains("p")) {
    for (VariantConfig& v : c.variants) {
      if (keeps_p(v.tag)) v.p = p;
    }
  }
  read_field(j, "seeds", c.seeds);
  read_field(j, "orderings", c.orderings);
  if (j.contains("train")) {
    const Json& t = j.at("train");
    check_keys(t, "train", {"epochs", "batch_size", "learning_rate"});
    read_field(t, "epochs", c.train.epochs);
    read_field(t, "batch_size", c.train.batch_size);
    read_field(t, "learning_rate", c.train.learning_rate);
  }
  if (j.contains("model")) {
    const Json& m = j.at("model");
    check_keys(m, "model", {"hidden_dim", "init_scale", "head_scale", "update_bias", "train_embeddings"});
    read_field(m, "hidden_dim", c.model.hidden_dim);
    read_field(m, "init_scale", c.model.init_scale);
    read_field(m, "head_scale", c.model.head_scale);
    read_field(m, "update_bias", c.model.update_bias);
    read_field(m, "train_embeddings", c.model.train_embeddings);
  }
  c.model.input_dim = c.family.embedding_dim;
  read_field(j, "p_grid", c.p_grid);
  read_field(j, "out", c.out_dir);
  read_field(j, "save_checkpoints", c.save_checkpoints);
  c.validate();
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json variants = Json::array();
  for (const VariantConfig& v : c.variants) {
    if (keeps_p(v.tag)) {
      variants.push_back(Json{{"name", std::string(variant_name(v.tag))}, {"p", v.p}});
    } else {
      variants.push_back(std::string(variant_name(v.tag)));
    }
  }
  return Json{{"dataset", c.dataset},
              {"tasks", c.tasks},
              {"family", family_to_json(c.family)},
              {"variants", std::move(variants)},
              {"seeds", c.seeds},
              {"orderings", c.orderings},
              {"train",
               {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate}}},
              {"model",
               {{"hidden_dim", c.model.hidden_dim},
                {"init_scale", c.model.init_scale},
                {"head_scale", c.model.head_scale},
                {"update_bias", c.model.update_bias},
                {"train_embeddings", c.model.train_embeddings}}},
              {"p_grid", c.p_grid},
              {"out", c.out_dir},
              {"save_checkpoints", c.save_checkpoints}};
}

std::vector<int> task_ordering(std::uint64_t seed, std::size_t ordering, std::size_t tasks) {
  std::vector<int> order(tasks);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {kOrderTag, static_cast<std::uint64_t>(ordering)}));
  rng.shuffle(std::span<int>(order));
  return order;
}

Json record_to_json(const RunRecord& r) {
  return Json{{"dataset", r.dataset},
              {"seed", r.seed},
              {"ordering", r.ordering},
              {"variant", std::string(variant_name(r.variant.tag))},
              {"p", variant_p_json(r.variant)},
              {"tasks", r.tasks},
              {"matrix", accuracy_matrix_to_json(r.matrix)}};
}

RunRecord record_from_json(const Json& j) {
  try {
    RunRecord r;
    r.dataset = j.at("dataset").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.ordering = j.at("ordering").get<std::size_t>();
    const Variant tag = parse_variant(j.at("variant").get<std::string>());
    r.variant = canonical(VariantConfig{tag, j.at("p").is_null() ? 1.0 : j.at("p").get<double>()});
    r.tasks = j.at("tasks").get<std::vector<int>>();
    r.matrix = accuracy_matrix_from_json(j.at("matrix"));
    return r;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed run record: ") + e.what());
  }
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records, double a_random) {
  using RunKey = std::pair<std::uint64_t, std::size_t>;
  std::map<RunKey, const RunRecord*> joints;
  std::map<std::tuple<int, double>, std::map<RunKey, const RunRecord*>> groups;
  std::string dataset;
  std::size_t T = 0;
  for (const RunRecord& r : records) {
    if (dataset.empty()) {
      dataset = r.dataset;
      T = r.matrix.tasks();
    }
    if (r.dataset != dataset || r.matrix.tasks() != T) {
      throw DataError("records from different datasets cannot be summarized together");
    }
    const RunKey key{r.seed, r.ordering};
    if (r.variant.tag == Variant::kMultiTaskJoint) {
      if (!joints.emplace(key, &r).second) throw DataError("duplicate joint record");
    } else if (!groups[variant_key(canonical(r.variant))].emplace(key, &r).second) {
      throw DataError("duplicate run record");
    }
  }
  for (const auto& [key, joint] : joints) {
    groups[variant_key(joint->variant)].emplace(key, joint);
  }

  std::vector<SummaryRow> rows;
  if (records.empty()) return rows;
  std::vector<std::size_t> scopes;
  if (T >= 2) scopes.push_back(2);
  scopes.push_back(T);
  for (const auto& [vkey, runs] : groups) {
    const VariantConfig variant{static_cast<Variant>(std::get<0>(vkey)), std::get<1>(vkey)};
    for (std::size_t t : scopes) {
      std::vector<double> accuracies;
      std::vector<double> ratios;
      for (const auto& [key, run] : runs) {
        const auto joint = joints.find(key);
        if (joint == joints.end()) {
          throw DataError("no joint record for seed " + std::to_string(key.first) +
                          ", ordering " + std::to_string(key.second));
        }
        if (joint->second->tasks != run->tasks) throw DataError("joint record order differs");
        const std::vector<double> a_joint = joint->second->matrix.row(t);
        const std::vector<double> a_rand(t, a_random);
        accuracies.push_back(100.0 * averaged_accuracy(run->matrix, t));
        try {
          ratios.push_back(forgetting_ratio(run->matrix, t, a_rand, a_joint));
        } catch (const DomainError&) {
          // The joint reference did not beat chance on some task; rho is undefined there.
          ratios.push_back(std::numeric_limits<double>::quiet_NaN());
        }
      }
      const std::string scope = t == T ? "T" : "2";
      const MeanStd a = mean_std(accuracies);
      const MeanStd rho = mean_std(ratios);
      rows.push_back(SummaryRow{dataset, variant, "A", scope, a.mean, a.std, a.n});
      rows.push_back(SummaryRow{dataset, variant, "rho", scope, rho.mean, rho.std, rho.n});
    }
  }
  return rows;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "dataset,variant,p,metric,t_scope,mean,std,n_orderings\n";
  for (const SummaryRow& r : rows) {
    out += r.dataset + "," + std::string(variant_name(r.variant.tag)) + "," + format_p(r.variant) +
           "," + r.metric + "," + r.t_scope + "," + format_fixed(r.mean, 2) + "," +
           format_fixed(r.std, 2) + "," + std::to_string(r.n_orderings) + "\n";
  }
  return out;
}

const SummaryRow& find_row(const std::vector<SummaryRow>& rows, const VariantConfig& variant,
                           const std::string& metric, const std::string& t_scope) {
  const VariantConfig v = canonical(variant);
  for (const SummaryRow& r : rows) {
    if (r.variant == v && r.metric == metric && r.t_scope == t_scope) return r;
  }
  throw LookupError("no summary row for " + std::string(variant_name(variant.tag)) + " " +
                    metric + " at " + t_scope);
}

ExperimentResult run_grid(const ExperimentConfig& config, const Progress& progress) {
  return run_grid_impl(config, progress, nullptr);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const Progress& progress) {
  std::map<std::string, std::string> checkpoints;
  ExperimentResult result =
      run_grid_impl(config, progress, config.save_checkpoints ? &checkpoints : nullptr);
  write_outputs(config, "summary.csv", summary_csv(result.summary), result.records);
  for (const auto& [name, text] : checkpoints) {
    write_file(std::filesystem::path(config.out_dir) / "checkpoints" / name, text);
  }
  return result;
}

std::vector<SummaryRow> sweep_retention(const ExperimentConfig& config, const Progress& progress) {
  check_grid(config.p_grid);
  std::vector<VariantConfig> variants;
  for (double p : config.p_grid) variants.push_back(VariantConfig{Variant::kTaskDrop, p});
  const ExperimentConfig c = with_variants(config, variants);
  const ExperimentResult result = run_grid(c, progress);
  std::vector<SummaryRow> rows;
  for (const VariantConfig& v : variants) rows.push_back(find_row(result.summary, v, "A", "T"));
  write_outputs(c, "sweep.csv", summary_csv(rows), result.records);
  return rows;
}

std::vector<SummaryRow> compare_dropout(const ExperimentConfig& config, const Progress& progress) {
  check_grid(config.p_grid);
  std::vector<VariantConfig> variants;
  for (double p : config.p_grid) {
    variants.push_back(VariantConfig{Variant::kTaskDrop, p});
    variants.push_back(VariantConfig{Variant::kStandardDropout, p});
  }
  const ExperimentConfig c = with_variants(config, variants);
  const ExperimentResult result = run_grid(c, progress);
  std::vector<SummaryRow> rows;
  for (const VariantConfig& v : variants) rows.push_back(find_row(result.summary, v, "A", "T"));
  write_outputs(c, "compare_dropout.csv", summary_csv(rows), result.records);
  return rows;
}

std::string dump_representations(const Model& model, int task_id, const Dataset& data) {
  model.head(task_id);
  std::string out;
  constexpr std::size_t kChunk = 250;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t stop = std::min(data.size(), start + kChunk);
    std::vector<std::vector<int>> sequences;
    std::vector<int> labels;
    for (std::size_t i = start; i < stop; ++i) {
      sequences.push_back(data.examples[i].tokens);
      labels.push_back(data.examples[i].label);
    }
    const Tensor reps = model.representations(task_id, make_batch(sequences, labels));
    const auto m = reps.matrix();
    for (Index r = 0; r < m.rows(); ++r) {
      std::vector<double> v(m.row(r).begin(), m.row(r).end());
      out += Json{{"vector", std::move(v)}, {"label", labels[static_cast<std::size_t>(r)]}}.dump();
      out += '\n';
    }
  }
  return out;
}

void export_family(const TaskFamily& family, const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  write_file(dir / "embeddings.json", embeddings_to_json(family.embeddings).dump() + "\n");
  Json tasks = Json::array();
  for (const SyntheticTaskSpec& s : family.tasks) {
    auto range = [](const TokenRange& r) { return Json{r.begin, r.end}; };
    tasks.push_back(Json{{"task_id", s.task_id},
                         {"shared_signal", s.shared_signal},
                         {"neutral", range(s.neutral)},
                         {"shared_positive", range(s.shared_positive)},
                         {"shared_negative", range(s.shared_negative)},
                         {"private_positive", range(s.private_positive)},
                         {"private_negative", range(s.private_negative)}});
  }
  write_file(dir / "family.json",
             Json{{"seed", family.seed}, {"config", family_to_json(family.config)},
                  {"tasks", std::move(tasks)}}
                     .dump(2) + "\n");
  for (const SyntheticTaskSpec& s : family.tasks) {
    for (Split split : {Split::kTrain, Split::kTest}) {
      write_file(dir / ("task_" + std::to_string(s.task_id) + "_" + std::string(split_name(split)) +
                        ".jsonl"),
                 dataset_to_jsonl(task_dataset(family, s.task_id, split)));
    }
  }
}

}  // namespace taskdrop
