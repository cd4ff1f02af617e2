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
#include <map>
#include <span>
#include <vector>

#include "taskdrop/random.hpp"
#include "taskdrop/tape.hpp"

namespace taskdrop {

/// One 0/1 byte per unit.
using BinaryMask = std::vector<std::uint8_t>;

/// Per-task unit masks, one per masked layer, each entry drawn Bernoulli(p).
struct TaskMask {
  int task_id = 0;
  double p = 1.0;
  std::vector<BinaryMask> layer_masks;

  /// The mask of one layer as a rank-1 tensor of 0.0 / 1.0.
  Tensor layer_tensor(std::size_t layer = 0) const;

  friend bool operator==(const TaskMask&, const TaskMask&) = default;
};

/// Draws a fresh mask. Throws DomainError when p is outside [0, 1].
TaskMask generate_task_mask(int task_id, std::span<const Index> layer_widths, double p, Rng& rng);

/// Write-once store of task masks.
///
/// The k-th generated mask is drawn from its own stream derived from (seed, k), so the mask
/// sequence depends only on the seed and the generation order. Masks are immutable once
/// registered and at() returns the same object for the lifetime of the registry.
class MaskRegistry {
 public:
  explicit MaskRegistry(std::uint64_t seed = 0) : seed_(seed) {}

  /// Generates and registers the mask of a new task. Throws RegistryError on a duplicate id.
  const TaskMask& generate(int task_id, std::span<const Index> layer_widths, double p);

  /// Registers an existing mask (checkpoint restore). Throws RegistryError on a duplicate id.
  void insert(TaskMask mask);

  const TaskMask& at(int task_id) const;
  bool contains(int task_id) const { return masks_.count(task_id) != 0; }
  std::size_t size() const { return masks_.size(); }

  /// Task ids in generation order.
  const std::vector<int>& order() const { return order_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::map<int, TaskMask> masks_;
  std::vector<int> order_;
};

/// y' = y * mask, broadcast over the batch axis. Throws ShapeError on a width mismatch.
Var apply_mask(Var y, const BinaryMask& mask);

/// Fresh Bernoulli(p) mask, never registered.
BinaryMask dropout_mask(Index width, double p, Rng& rng);

/// A [batch x width] tensor of independent per-sample Bernoulli(p) masks.
Tensor dropout_masks(Index batch, Index width, double p, Rng& rng);

/// Probability that a unit active for one task is next re-activated exactly s tasks later,
/// (1 - p)^(s - 1) * p. Throws DomainError for s < 1 or p outside [0, 1].
double skip_transfer_probability(double p, int s);

/// Empirical s-step sharing events of a task stream.
///
/// For a unit active at stream position t, its event is the smallest s >= 1 with the unit
/// active again at t + s. frequency(s) divides the event count by the number of (unit, t)
/// pairs active at t that could observe a gap of s (t + s <= T), which removes the truncation
/// at the end of the stream and makes it directly comparable to skip_transfer_probability.
struct TransferStats {
  std::size_t tasks = 0;
  std::size_t units = 0;
  /// events[s] for s in [1, tasks - 1]; index 0 unused.
  std::vector<std::uint64_t> events;
  std::vector<std::uint64_t> at_risk;
  /// unit_events[u][s] and the number of positions t < T at which unit u is active.
  std::vector<std::vector<std::uint32_t>> unit_events;
  std::vector<std::uint32_t> unit_active;

  std::size_t max_step() const { return tasks > 0 ? tasks - 1 : 0; }
  double frequency(std::size_t s) const;
  /// Share of unit u's active positions (with a successor task) followed by an s-step event.
  double unit_frequency(std::size_t unit, std::size_t s) const;
};

/// Throws DataError when the registry holds fewer than two tasks.
TransferStats empirical_skip_stats(const MaskRegistry& registry, std::size_t layer = 0);
TransferStats empirical_skip_stats(std::span<const BinaryMask> masks_in_stream_order);

/// Fraction of units active in both masks.
double mask_overlap(const BinaryMask& a, const BinaryMask& b);
/// Per-layer overlap of two task masks.
std::vector<double> mask_overlap(const TaskMask& a, const TaskMask& b);

}  // namespace taskdrop
