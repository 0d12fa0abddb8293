#include "cbl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbl/error.hpp"
#include "cbl/parallel.hpp"

namespace cbl {

std::optional<double> ConsistencyCurve::at(std::int64_t t) const {
  if (t < 1 || t > static_cast<std::int64_t>(offsets.size())) return std::nullopt;
  const auto k = static_cast<std::size_t>(t - 1);
  if (!defined(k)) return std::nullopt;
  return mean[k];
}

ConsistencyTally::ConsistencyTally(std::int64_t max_offset)
    : same(static_cast<std::size_t>(max_offset), 0), samples(static_cast<std::size_t>(max_offset), 0) {}

void ConsistencyTally::merge(const ConsistencyTally& other) {
  if (same.size() < other.same.size()) {
    same.resize(other.same.size(), 0);
    samples.resize(other.samples.size(), 0);
  }
  for (std::size_t k = 0; k < other.same.size(); ++k) {
    same[k] += other.same[k];
    samples[k] += other.samples[k];
  }
  references += other.references;
}

ConsistencyCurve ConsistencyTally::finish() const {
  ConsistencyCurve c;
  c.trials = references;
  c.offsets.resize(same.size());
  c.mean.resize(same.size());
  c.samples = samples;
  for (std::size_t k = 0; k < same.size(); ++k) {
    c.offsets[k] = static_cast<std::int64_t>(k) + 1;
    c.mean[k] = samples[k] > 0 ? static_cast<double>(same[k]) / static_cast<double>(samples[k])
                               : std::numeric_limits<double>::quiet_NaN();
  }
  return c;
}

void tally_trial(ConsistencyTally& tally, const std::vector<Outcome>& decisions) {
  if (decisions.empty() || decisions.front() == Outcome::Stall) return;
  const Outcome ref = decisions.front();
  ++tally.references;
  const std::size_t n = std::min(decisions.size() - 1, tally.same.size());
  for (std::size_t k = 0; k < n; ++k) {
    const Outcome d = decisions[k + 1];
    if (d == Outcome::Stall) continue;
    ++tally.samples[k];
    if (d == ref) ++tally.same[k];
  }
}

namespace {

void check_window(const ReservoirConfig& config, std::int64_t max_offset) {
  config.validate();
  if (max_offset < 1) throw ValidationError("max_offset must be >= 1");
  if (config.t0 + max_offset > config.total_cycles)
    throw ValidationError("t0 + max_offset must not exceed total_cycles");
}

// Outcomes at cycles t0..t0+max_offset of one trial.
std::vector<Outcome> window(const ReservoirConfig& config, std::int64_t trial, std::int64_t max_offset) {
  std::vector<Outcome> out;
  out.reserve(static_cast<std::size_t>(max_offset) + 1);
  drive_trial(config, trial, config.t0 + max_offset, [&](const DecisionEvent& e) {
    if (e.cycle >= config.t0) out.push_back(e.outcome);
  });
  return out;
}

}  // namespace

ConsistencyCurve consistency_curve(const ReservoirConfig& config, std::int64_t max_offset) {
  check_window(config, max_offset);
  ConsistencyTally tally = reduce_blocks<ConsistencyTally>(
      config.trials, [&] { return ConsistencyTally(max_offset); },
      [&](ConsistencyTally& acc, std::int64_t trial) { tally_trial(acc, window(config, trial, max_offset)); },
      [](ConsistencyTally& into, const ConsistencyTally& from) { into.merge(from); });
  if (tally.references == 0) throw ValidationError("every trial stalled at t0; consistency curve is empty");
  return tally.finish();
}

double max_consistency(const ConsistencyCurve& curve) {
  std::optional<double> best;
  for (std::size_t k = 0; k < curve.size(); ++k)
    if (curve.defined(k) && (!best || curve.mean[k] > *best)) best = curve.mean[k];
  if (!best) throw ValidationError("max_consistency: curve has no defined offsets");
  return *best;
}

double mean_consistency(const ConsistencyCurve& curve, std::int64_t lo, std::int64_t hi) {
  double sum = 0.0;
  int count = 0;
  for (std::int64_t t = lo; t <= hi; ++t) {
    if (auto m = curve.at(t)) {
      sum += *m;
      ++count;
    }
  }
  if (count == 0) throw ValidationError("mean_consistency: no defined offsets in range");
  return sum / count;
}

int disabled_arrows(const ReservoirState& state) {
  return 2 * state.n_levels() - state.enabled_counts().total();
}

ActivePortionStat active_portion(const ReservoirConfig& config) {
  config.validate();
  struct Acc {
    std::int64_t disabled = 0;
    std::int64_t trials = 0;
  };
  const Acc total = reduce_blocks<Acc>(
      config.trials, [] { return Acc{}; },
      [&](Acc& acc, std::int64_t trial) {
        ReservoirState state = new_state(config);
        Rng rng = trial_stream(config.seed, static_cast<std::uint64_t>(trial));
        for (Cycle c = 1; c < config.t0; ++c) step(state, rng);
        state.recover_to(config.t0);
        acc.disabled += disabled_arrows(state);
        ++acc.trials;
      },
      [](Acc& into, const Acc& from) {
        into.disabled += from.disabled;
        into.trials += from.trials;
      });
  ActivePortionStat stat;
  stat.trials = total.trials;
  stat.mean_fraction = static_cast<double>(total.disabled) /
                       (2.0 * config.n_levels * static_cast<double>(total.trials));
  return stat;
}

std::vector<std::int64_t> walk_positions(const std::vector<Outcome>& decisions) {
  std::vector<std::int64_t> pos;
  pos.reserve(decisions.size());
  std::int64_t x = 0;
  for (Outcome d : decisions) {
    if (d == Outcome::L) ++x;
    if (d == Outcome::R) --x;
    pos.push_back(x);
  }
  return pos;
}

std::vector<WalkTrace> walk_traces(const ReservoirConfig& config, std::int64_t n_traces,
                                   std::int64_t max_offset) {
  check_window(config, max_offset);
  if (n_traces < 0 || n_traces > config.trials) throw ValidationError("n_traces must be in [0, trials]");
  std::vector<WalkTrace> traces;
  for (std::int64_t trial = 0; trial < config.trials && std::ssize(traces) < n_traces; ++trial) {
    std::vector<Outcome> w = window(config, trial, max_offset);
    if (w.front() == Outcome::Stall) continue;
    traces.push_back(WalkTrace{trial, w.front(), walk_positions(w)});
  }
  return traces;
}

namespace {

template <class Weight>
std::vector<double> ensemble_mean(const std::vector<WalkTrace>& traces, Weight weight) {
  if (traces.empty()) return {};
  std::vector<double> mean(traces.front().positions.size(), 0.0);
  for (const WalkTrace& tr : traces) {
    const double w = weight(tr);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += w * static_cast<double>(tr.positions[k]);
  }
  for (double& m : mean) m /= static_cast<double>(traces.size());
  return mean;
}

}  // namespace

std::vector<double> mean_signed_displacement(const std::vector<WalkTrace>& traces) {
  return ensemble_mean(traces, [](const WalkTrace& t) { return t.first_decision == Outcome::L ? 1.0 : -1.0; });
}

std::vector<double> mean_position(const std::vector<WalkTrace>& traces) {
  return ensemble_mean(traces, [](const WalkTrace&) { return 1.0; });
}

std::vector<SweepRow> sweep(const std::vector<ReservoirConfig>& grid, std::int64_t max_offset) {
  if (grid.empty()) throw ValidationError("sweep: grid is empty");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const ReservoirConfig& cfg : grid) {
    rows.push_back(SweepRow{cfg.n_levels, cfg.lifetime, max_consistency(consistency_curve(cfg, max_offset)),
                            active_portion(cfg).mean_fraction});
  }
  return rows;
}

std::vector<ReservoirConfig> make_grid(const ReservoirConfig& base, const std::vector<int>& n_levels,
                                       const std::vector<int>& lifetimes) {
  std::vector<ReservoirConfig> grid;
  for (int n : n_levels) {
    for (int lt : lifetimes) {
      ReservoirConfig c = base;
      c.n_levels = n;
      c.lifetime = lt;
      grid.push_back(c);
    }
  }
  return grid;
}

}  // namespace cbl
