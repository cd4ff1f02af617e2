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

#include "taskdrop/masking.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "taskdrop/error.hpp"
#include "taskdrop/ops.hpp"

namespace taskdrop {

namespace {

void check_ratio(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError("retention ratio " + std::to_string(p) + " outside [0, 1]");
  }
}

BinaryMask draw(Index width, double p, Rng& rng) {
  BinaryMask mask(static_cast<std::size_t>(width));
  for (auto& bit : mask) bit = rng.bernoulli(p) ? 1 : 0;
  return mask;
}

}  // namespace

Tensor TaskMask::layer_tensor(std::size_t layer) const {
  const BinaryMask& m = layer_masks.at(layer);
  Tensor t(Shape{static_cast<Index>(m.size())});
  for (std::size_t i = 0; i < m.size(); ++i) t[static_cast<Index>(i)] = m[i] ? 1.0 : 0.0;
  return t;
}

TaskMask generate_task_mask(int task_id, std::span<const Index> layer_widths, double p,
                            Rng& rng) {
  check_ratio(p);
  TaskMask mask{task_id, p, {}};
  mask.layer_masks.reserve(layer_widths.size());
  for (Index width : layer_widths) mask.layer_masks.push_back(draw(width, p, rng));
  return mask;
}

const TaskMask& MaskRegistry::generate(int task_id, std::span<const Index> layer_widths,
                                       double p) {
  if (contains(task_id)) {
    throw RegistryError("task " + std::to_string(task_id) + " already has a mask");
  }
  Rng rng(derive_seed(seed_, {static_cast<std::uint64_t>(order_.size())}));
  insert(generate_task_mask(task_id, layer_widths, p, rng));
  return masks_.at(task_id);
}

void MaskRegistry::insert(TaskMask mask) {
  const int id = mask.task_id;
  if (contains(id)) throw RegistryError("task " + std::to_string(id) + " already has a mask");
  masks_.emplace(id, std::move(mask));
  order_.push_back(id);
}

const TaskMask& MaskRegistry::at(int task_id) const {
  const auto it = masks_.find(task_id);
  if (it == masks_.end()) {
    throw RegistryError("no mask registered for task " + std::to_string(task_id));
  }
  return it->second;
}

Var apply_mask(Var y, const BinaryMask& mask) {
  if (!y.valid()) throw UsageError("apply_mask on an unbound Var");
  if (static_cast<Index>(mask.size()) != y.value().cols()) {
    throw ShapeError("mask of width " + std::to_string(mask.size()) + " applied to " +
                     shape_string(y.value().shape()));
  }
  Tensor m(Shape{static_cast<Index>(mask.size())});
  for (std::size_t i = 0; i < mask.size(); ++i) m[static_cast<Index>(i)] = mask[i] ? 1.0 : 0.0;
  return mul(y, y.tape()->constant(std::move(m)));
}

BinaryMask dropout_mask(Index width, double p, Rng& rng) {
  check_ratio(p);
  return draw(width, p, rng);
}

Tensor dropout_masks(Index batch, Index width, double p, Rng& rng) {
  check_ratio(p);
  Tensor t(Shape{batch, width});
  for (Index i = 0; i < t.size(); ++i) t[i] = rng.bernoulli(p) ? 1.0 : 0.0;
  return t;
}

double skip_transfer_probability(double p, int s) {
  check_ratio(p);
  if (s < 1) throw DomainError("skip step s must be at least 1, got " + std::to_string(s));
  return std::pow(1.0 - p, s - 1) * p;
}

double TransferStats::frequency(std::size_t s) const {
  if (s == 0 || s >= events.size() || at_risk[s] == 0) return 0.0;
  return static_cast<double>(events[s]) / static_cast<double>(at_risk[s]);
}

double TransferStats::unit_frequency(std::size_t unit, std::size_t s) const {
  const auto& row = unit_events.at(unit);
  if (s == 0 || s >= row.size() || unit_active[unit] == 0) return 0.0;
  return static_cast<double>(row[s]) / static_cast<double>(unit_active[unit]);
}

TransferStats empirical_skip_stats(std::span<const BinaryMask> masks) {
  if (masks.size() < 2) {
    throw DataError("skip statistics need at least 2 tasks, got " +
                    std::to_string(masks.size()));
  }
  const std::size_t tasks = masks.size();
  const std::size_t units = masks.front().size();
  for (const BinaryMask& m : masks) {
    if (m.size() != units) throw ShapeError("task masks of different widths");
  }
  TransferStats stats;
  stats.tasks = tasks;
  stats.units = units;
  stats.events.assign(tasks, 0);
  stats.at_risk.assign(tasks, 0);
  stats.unit_events.assign(units, std::vector<std::uint32_t>(tasks, 0));
  stats.unit_active.assign(units, 0);
  for (std::size_t u = 0; u < units; ++u) {
    for (std::size_t t = 0; t + 1 < tasks; ++t) {
      if (!masks[t][u]) continue;
      ++stats.unit_active[u];
      const std::size_t horizon = tasks - 1 - t;
      for (std::size_t s = 1; s <= horizon; ++s) ++stats.at_risk[s];
      for (std::size_t s = 1; s <= horizon; ++s) {
        if (masks[t + s][u]) {
          ++stats.events[s];
          ++stats.unit_events[u][s];
          break;
        }
      }
    }
  }
  return stats;
}

TransferStats empirical_skip_stats(const MaskRegistry& registry, std::size_t layer) {
  std::vector<BinaryMask> masks;
  masks.reserve(registry.size());
  for (int id : registry.order()) masks.push_back(registry.at(id).layer_masks.at(layer));
  return empirical_skip_stats(masks);
}

double mask_overlap(const BinaryMask& a, const BinaryMask& b) {
  if (a.size() != b.size()) {
    throw ShapeError("mask widths differ: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  if (a.empty()) return 0.0;
  std::size_t both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) both += (a[i] && b[i]) ? 1 : 0;
  return static_cast<double>(both) / static_cast<double>(a.size());
}

std::vector<double> mask_overlap(const TaskMask& a, const TaskMask& b) {
  if (a.layer_masks.size() != b.layer_masks.size()) {
    throw ShapeError("task masks cover different layer counts");
  }
  std::vector<double> out;
  for (std::size_t l = 0; l < a.layer_masks.size(); ++l) {
    out.push_back(mask_overlap(a.layer_masks[l], b.layer_masks[l]));
  }
  return out;
}

}  // namespace taskdrop
