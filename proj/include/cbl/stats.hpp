#pragma once

// Observables aggregated over independent reservoir trials: decision
// consistency, active portion, random-walk traces and parameter sweeps.

#include <cstdint>
#include <optional>
#include <vector>

#include "cbl/reservoir.hpp"

namespace cbl {

/// Mean decision consistency per offset t after the reference decision.
/// `mean[k]` is NaN where `samples[k] == 0`.
struct ConsistencyCurve {
  std::vector<std::int64_t> offsets;
  std::vector<double> mean;
  std::vector<std::int64_t> samples;
  std::int64_t trials = 0;  // trials with a reference decision

  std::size_t size() const { return offsets.size(); }
  bool defined(std::size_t k) const { return samples[k] > 0; }
  /// Mean at offset t, if any trial contributed there.
  std::optional<double> at(std::int64_t t) const;
};

/// Integer tallies behind a ConsistencyCurve. Merging is associative and
/// commutative, so trials can be reduced in any order.
struct ConsistencyTally {
  std::vector<std::int64_t> same;
  std::vector<std::int64_t> samples;
  std::int64_t references = 0;

  explicit ConsistencyTally(std::int64_t max_offset = 0);
  void merge(const ConsistencyTally& other);
  ConsistencyCurve finish() const;
};

/// Adds one trial's decisions. `decisions[k]` is the outcome at offset k
/// (k = 0 is the reference). A Stall reference drops the trial; a Stall at
/// offset k adds no sample there.
void tally_trial(ConsistencyTally& tally, const std::vector<Outcome>& decisions);

ConsistencyCurve consistency_curve(const ReservoirConfig& config, std::int64_t max_offset);

/// Largest defined mean over offsets >= 1. Throws ValidationError when no
/// offset is defined.
double max_consistency(const ConsistencyCurve& curve);

/// Mean consistency over offsets in [lo, hi], weighting offsets equally.
double mean_consistency(const ConsistencyCurve& curve, std::int64_t lo, std::int64_t hi);

struct ActivePortionStat {
  double mean_fraction = 0.0;
  std::int64_t trials = 0;
};

/// Fraction of the 2N arrows that are disabled at the start of cycle t0
/// (after recovery, before firing), averaged over trials.
ActivePortionStat active_portion(const ReservoirConfig& config);

/// Disabled-arrow count of a single state.
int disabled_arrows(const ReservoirState& state);

struct WalkTrace {
  std::int64_t trial_id = 0;
  Outcome first_decision = Outcome::L;
  /// positions[k] after the decision at t0 + k; L moves +1, R moves -1 and a
  /// Stall repeats the previous position.
  std::vector<std::int64_t> positions;
};

/// Walk positions for a decision sequence whose first entry is the reference.
std::vector<std::int64_t> walk_positions(const std::vector<Outcome>& decisions);

/// The first `n_traces` trials (by index) whose t0 decision is not a Stall,
/// each traced over offsets 0..max_offset.
std::vector<WalkTrace> walk_traces(const ReservoirConfig& config, std::int64_t n_traces,
                                   std::int64_t max_offset);

/// Per offset, the ensemble mean of position * sign(first decision).
std::vector<double> mean_signed_displacement(const std::vector<WalkTrace>& traces);

/// Per offset, the ensemble mean position.
std::vector<double> mean_position(const std::vector<WalkTrace>& traces);

struct SweepRow {
  int n_levels = 0;
  int lifetime = 0;
  double max_consistency = 0.0;
  double active_portion = 0.0;
};

/// One row per config, in grid order.
std::vector<SweepRow> sweep(const std::vector<ReservoirConfig>& grid, std::int64_t max_offset);

/// Cartesian product of n-levels and lifetimes over a template config.
std::vector<ReservoirConfig> make_grid(const ReservoirConfig& base, const std::vector<int>& n_levels,
                                       const std::vector<int>& lifetimes);

}  // namespace cbl
