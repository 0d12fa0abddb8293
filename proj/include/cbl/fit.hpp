#pragma once

// Maps observed decision consistency onto an estimated reservoir size by
// inverting a simulated consistency-vs-N curve.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cbl/reservoir.hpp"

namespace cbl::fit {

/// Consistency below 0.5 - kBelowChanceSlack is flagged below_chance.
inline constexpr double kBelowChanceSlack = 0.02;

/// A smoothed curve spanning less than this cannot be inverted.
inline constexpr double kMinLookupSpan = 0.05;

struct ParticipantRecord {
  std::string participant_id;
  double consistency = 0.0;
};

struct LookupParams {
  int lifetime = 10;
  std::int64_t offset = 8;
  Cycle t0 = 200;
  std::int64_t trials = 50000;
  std::uint64_t seed = 42;
};

struct LookupCurve {
  std::vector<int> n_grid;
  std::vector<double> raw;
  std::vector<double> smoothed;  // non-increasing in N
  LookupParams params;

  /// Flat curves (e.g. lifetime 1) carry no size information.
  bool degenerate() const;
};

std::vector<int> default_grid();  // 2..50

/// Simulated consistency at `params.offset` for one reservoir size.
double simulate_consistency(int n_levels, const LookupParams& params);

/// Simulates every grid point and applies non-increasing isotonic smoothing.
LookupCurve build_lookup(const LookupParams& params, const std::vector<int>& n_grid = default_grid());

/// Wraps raw values into a curve (smoothing included); used when the raw
/// values come from elsewhere.
LookupCurve make_lookup(std::vector<int> n_grid, std::vector<double> raw, const LookupParams& params);

enum class FitFlag : std::uint8_t { ok, above_range, below_chance };

const char* to_string(FitFlag f);

struct FitResult {
  std::string participant_id;
  double consistency = 0.0;
  std::optional<int> estimated_n;
  FitFlag flag = FitFlag::ok;
};

/// Nearest grid N by smoothed consistency, ties to the smaller N. Throws
/// ValidationError on a degenerate curve.
FitResult estimate_reservoir_size(double consistency, const LookupCurve& curve, std::string participant_id = {});

std::vector<FitResult> fit_all(const std::vector<ParticipantRecord>& records, const LookupCurve& curve);

struct IngestResult {
  std::vector<ParticipantRecord> records;
  std::vector<std::string> warnings;
};

/// Reads `participant_id,consistency` CSV. Every bad row is reported (by
/// 1-based line number) in a single ValidationError.
IngestResult ingest_csv(const std::filesystem::path& path);

/// CSV `n,raw_consistency,smoothed_consistency` plus `<path>.params.json`.
void save_lookup(const LookupCurve& curve, const std::filesystem::path& csv_path);
LookupCurve load_lookup(const std::filesystem::path& csv_path);

std::filesystem::path params_sidecar(const std::filesystem::path& csv_path);

}  // namespace cbl::fit
