#pragma once

// Single-photon decision maker with waveplate feedback.
//
// The effective polarization angle starts at pi/4 and moves by
// delta = pi / R after every detection: towards horizontal (0) after D1,
// towards vertical (pi/2) after D2. The angle is tracked as an integer
// number of delta steps so the [0, pi/2] boundary test is exact. Leaving the
// closed interval terminates the trial.

#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "cbl/rng.hpp"
#include "cbl/stats.hpp"

namespace cbl::photon {

inline constexpr int kMinResolution = 4;
inline constexpr int kMaxResolution = 1000;

struct PhotonConfig {
  int resolution = 10;
  std::int64_t cycles = 500;
  std::int64_t trials = 20000;
  std::uint64_t seed = 42;

  double delta() const { return std::numbers::pi / resolution; }
  void validate() const;
};

enum class Detection : std::uint8_t { D1, D2 };

struct PhotonState {
  int resolution = 10;
  std::int64_t steps = 0;  // theta = pi/4 + steps * delta
  std::optional<std::int64_t> terminated_at;

  double theta() const;
  bool active() const { return !terminated_at; }
};

PhotonState initial_photon_state(int resolution);

/// Whether pi/4 + steps * pi/R lies in [0, pi/2], i.e. |4 steps| <= R.
bool in_range(int resolution, std::int64_t steps);

/// D1 with probability cos^2(theta). Requires theta in [0, pi/2].
Detection detect(double theta, Rng& rng);

/// Lattice form of the feedback rule: D1 steps down, D2 steps up. Returns
/// nullopt when the new angle leaves [0, pi/2].
std::optional<std::int64_t> update_steps(int resolution, std::int64_t steps, Detection d);

/// Real-valued form: theta -/+ delta, or nullopt outside [0, pi/2]. A
/// tolerance of a few ulps absorbs rounding at the boundary.
std::optional<double> update_angle(double theta, Detection d, double delta);

struct PhotonTrialResult {
  std::vector<Detection> decisions;
  std::optional<std::int64_t> terminated_at;  // cycle at which no decision is made
  std::int64_t final_steps = 0;               // last in-range lattice position
  double final_theta = 0.0;
};

PhotonTrialResult run_photon_trial(const PhotonConfig& config, std::int64_t trial_index);

/// Reference is the cycle-1 decision; offset t compares cycle 1 + t.
/// Trials terminated before cycle 1 + t contribute no sample at t.
ConsistencyCurve photon_consistency_curve(const PhotonConfig& config);

/// Rotation away from pi/4 relative to a full quarter turn: 1 for a
/// terminated trial, |theta - pi/4| / (pi/4) otherwise.
double rotation_fraction(const PhotonTrialResult& r, int resolution);

ActivePortionStat photon_active_portion(const PhotonConfig& config);

struct PhotonSummary {
  int resolution = 0;
  double max_consistency = 0.0;
  double active_portion = 0.0;
  double termination_fraction = 0.0;
};

/// Curve, active portion and termination fraction from a single pass.
struct PhotonAnalysis {
  ConsistencyCurve curve;
  PhotonSummary summary;
};

PhotonAnalysis analyze(const PhotonConfig& config);

}  // namespace cbl::photon
