#include "cbl/photon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "cbl/error.hpp"
#include "cbl/parallel.hpp"

namespace cbl::photon {

namespace {
constexpr double kQuarterPi = std::numbers::pi / 4;
constexpr double kHalfPi = std::numbers::pi / 2;
}  // namespace

void PhotonConfig::validate() const {
  if (resolution < kMinResolution || resolution > kMaxResolution)
    throw ValidationError("resolution must be in [4, 1000]");
  if (cycles < 1) throw ValidationError("cycles must be >= 1");
  if (trials < 1) throw ValidationError("trials must be >= 1");
}

// Clamped so that an in-range lattice point at the boundary does not round past it.
double PhotonState::theta() const {
  return std::clamp(kQuarterPi + static_cast<double>(steps) * (std::numbers::pi / resolution), 0.0, kHalfPi);
}

PhotonState initial_photon_state(int resolution) { return PhotonState{resolution, 0, std::nullopt}; }

bool in_range(int resolution, std::int64_t steps) { return std::llabs(4 * steps) <= resolution; }

Detection detect(double theta, Rng& rng) {
  expects(theta >= 0.0 && theta <= kHalfPi, "detect: theta outside [0, pi/2]");
  const double c = std::cos(theta);
  return uniform01(rng) < c * c ? Detection::D1 : Detection::D2;
}

std::optional<std::int64_t> update_steps(int resolution, std::int64_t steps, Detection d) {
  const std::int64_t next = d == Detection::D1 ? steps - 1 : steps + 1;
  if (!in_range(resolution, next)) return std::nullopt;
  return next;
}

std::optional<double> update_angle(double theta, Detection d, double delta) {
  constexpr double kSlack = 1e-12;
  const double next = d == Detection::D1 ? theta - delta : theta + delta;
  if (next < -kSlack || next > kHalfPi + kSlack) return std::nullopt;
  return std::clamp(next, 0.0, kHalfPi);
}

PhotonTrialResult run_photon_trial(const PhotonConfig& config, std::int64_t trial_index) {
  config.validate();
  Rng rng = trial_stream(config.seed, static_cast<std::uint64_t>(trial_index));
  PhotonState state = initial_photon_state(config.resolution);
  PhotonTrialResult out;
  out.decisions.reserve(static_cast<std::size_t>(std::min<std::int64_t>(config.cycles, 4096)));
  for (std::int64_t c = 1; c <= config.cycles; ++c) {
    const Detection d = detect(state.theta(), rng);
    out.decisions.push_back(d);
    const auto next = update_steps(config.resolution, state.steps, d);
    if (!next) {
      state.terminated_at = c + 1;
      break;
    }
    state.steps = *next;
  }
  out.terminated_at = state.terminated_at;
  out.final_steps = state.steps;
  out.final_theta = state.theta();
  return out;
}

double rotation_fraction(const PhotonTrialResult& r, int resolution) {
  if (r.terminated_at) return 1.0;
  return 4.0 * static_cast<double>(std::llabs(r.final_steps)) / resolution;
}

namespace {

struct PhotonAcc {
  ConsistencyTally tally;
  double rotation = 0.0;
  std::int64_t terminated = 0;
  std::int64_t trials = 0;

  void merge(const PhotonAcc& o) {
    tally.merge(o.tally);
    rotation += o.rotation;
    terminated += o.terminated;
    trials += o.trials;
  }
};

PhotonAcc accumulate(const PhotonConfig& config) {
  config.validate();
  const std::int64_t max_offset = config.cycles - 1;
  return reduce_blocks<PhotonAcc>(
      config.trials, [&] { return PhotonAcc{ConsistencyTally(max_offset)}; },
      [&](PhotonAcc& acc, std::int64_t trial) {
        const PhotonTrialResult r = run_photon_trial(config, trial);
        std::vector<Outcome> seq;
        seq.reserve(r.decisions.size());
        for (Detection d : r.decisions) seq.push_back(d == Detection::D1 ? Outcome::L : Outcome::R);
        tally_trial(acc.tally, seq);
        acc.rotation += rotation_fraction(r, config.resolution);
        acc.terminated += r.terminated_at.has_value();
        ++acc.trials;
      },
      [](PhotonAcc& into, const PhotonAcc& from) { into.merge(from); });
}

}  // namespace

ConsistencyCurve photon_consistency_curve(const PhotonConfig& config) {
  if (config.cycles < 2) throw ValidationError("photon consistency needs cycles >= 2");
  return accumulate(config).tally.finish();
}

ActivePortionStat photon_active_portion(const PhotonConfig& config) {
  const PhotonAcc acc = accumulate(config);
  return ActivePortionStat{acc.rotation / static_cast<double>(acc.trials), acc.trials};
}

PhotonAnalysis analyze(const PhotonConfig& config) {
  if (config.cycles < 2) throw ValidationError("photon consistency needs cycles >= 2");
  const PhotonAcc acc = accumulate(config);
  PhotonAnalysis out;
  out.curve = acc.tally.finish();
  const double n = static_cast<double>(acc.trials);
  out.summary = PhotonSummary{config.resolution, max_consistency(out.curve), acc.rotation / n,
                              static_cast<double>(acc.terminated) / n};
  return out;
}

}  // namespace cbl::photon
