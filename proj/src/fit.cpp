#include "cbl/fit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cbl/error.hpp"
#include "cbl/isotonic.hpp"
#include "cbl/stats.hpp"
#include "cbl/table.hpp"

namespace cbl::fit {

namespace {

constexpr double kChance = 0.5;

void validate(const LookupParams& p) {
  if (p.lifetime < 1) throw ValidationError("lookup lifetime must be >= 1");
  if (p.offset < 1) throw ValidationError("lookup offset must be >= 1");
  if (p.t0 < 1) throw ValidationError("lookup t0 must be >= 1");
  if (p.trials < 1) throw ValidationError("lookup trials must be >= 1");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace

bool LookupCurve::degenerate() const {
  if (smoothed.size() < 2) return true;
  return smoothed.front() - smoothed.back() < kMinLookupSpan;
}

std::vector<int> default_grid() {
  std::vector<int> grid;
  for (int n = 2; n <= 50; ++n) grid.push_back(n);
  return grid;
}

double simulate_consistency(int n_levels, const LookupParams& params) {
  validate(params);
  ReservoirConfig config;
  config.n_levels = n_levels;
  config.lifetime = params.lifetime;
  config.t0 = params.t0;
  config.total_cycles = params.t0 + params.offset;
  config.trials = params.trials;
  config.seed = params.seed;
  const auto value = consistency_curve(config, params.offset).at(params.offset);
  if (!value) throw NumericalError("no consistency samples at offset " + std::to_string(params.offset));
  return *value;
}

LookupCurve make_lookup(std::vector<int> n_grid, std::vector<double> raw, const LookupParams& params) {
  if (n_grid.empty()) throw ValidationError("lookup grid is empty");
  if (n_grid.size() != raw.size()) throw ValidationError("lookup grid and values differ in length");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end())
    throw ValidationError("lookup grid must be strictly increasing");
  if (n_grid.front() < 1) throw ValidationError("lookup grid entries must be >= 1");
  LookupCurve curve;
  curve.smoothed = isotonic_non_increasing(raw);
  curve.n_grid = std::move(n_grid);
  curve.raw = std::move(raw);
  curve.params = params;
  return curve;
}

LookupCurve build_lookup(const LookupParams& params, const std::vector<int>& n_grid) {
  validate(params);
  if (n_grid.empty()) throw ValidationError("lookup grid is empty");
  std::vector<double> raw;
  raw.reserve(n_grid.size());
  for (int n : n_grid) raw.push_back(simulate_consistency(n, params));
  return make_lookup(n_grid, std::move(raw), params);
}

const char* to_string(FitFlag f) {
  switch (f) {
    case FitFlag::ok: return "ok";
    case FitFlag::above_range: return "above_range";
    case FitFlag::below_chance: return "below_chance";
  }
  return "?";
}

FitResult estimate_reservoir_size(double consistency, const LookupCurve& curve, std::string participant_id) {
  if (curve.degenerate())
    throw ValidationError("lookup curve is flat (span below " + format_number(kMinLookupSpan) +
                          "); it carries no reservoir-size information, e.g. lifetime 1");
  if (!std::isfinite(consistency) || consistency < 0.0 || consistency > 1.0)
    throw ValidationError("consistency must lie in [0, 1]");
  FitResult result{std::move(participant_id), consistency, std::nullopt, FitFlag::ok};
  if (consistency > curve.smoothed.front()) {
    result.flag = FitFlag::above_range;
    return result;
  }
  if (consistency < kChance - kBelowChanceSlack) {
    result.flag = FitFlag::below_chance;
    return result;
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < curve.smoothed.size(); ++k)
    if (std::abs(curve.smoothed[k] - consistency) < std::abs(curve.smoothed[best] - consistency)) best = k;
  result.estimated_n = curve.n_grid[best];
  return result;
}

std::vector<FitResult> fit_all(const std::vector<ParticipantRecord>& records, const LookupCurve& curve) {
  std::vector<FitResult> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(estimate_reservoir_size(r.consistency, curve, r.participant_id));
  return out;
}

IngestResult ingest_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("input file not found: " + path.string());
  const auto lines = lines_of(read_file(path));
  if (lines.empty() || trim(lines[0]) != "participant_id,consistency")
    throw ValidationError(path.string() + ": expected header 'participant_id,consistency'");

  IngestResult out;
  std::vector<std::string> errors;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const std::string line_no = std::to_string(k + 1);
    if (trim(lines[k]).empty()) continue;
    const auto fields = split(lines[k]);
    if (fields.size() != 2 || fields[0].empty()) {
      errors.push_back("line " + line_no + ": expected 'participant_id,consistency'");
      continue;
    }
    const auto value = parse_double(fields[1]);
    if (!value) {
      errors.push_back("line " + line_no + ": '" + std::string(fields[1]) + "' is not a number");
    } else if (*value < 0.0 || *value > 1.0) {
      errors.push_back("line " + line_no + ": consistency " + std::string(fields[1]) + " outside [0, 1]");
    } else {
      out.records.push_back({std::string(fields[0]), *value});
    }
  }
  if (!errors.empty()) {
    std::string msg = path.string() + ": " + std::to_string(errors.size()) + " invalid row(s)";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ValidationError(msg);
  }
  if (out.records.empty()) out.warnings.push_back(path.string() + ": no participant rows");
  return out;
}

std::filesystem::path params_sidecar(const std::filesystem::path& csv_path) {
  return std::filesystem::path(csv_path.string() + ".params.json");
}

void save_lookup(const LookupCurve& curve, const std::filesystem::path& csv_path) {
  Table t{{"n", "raw_consistency", "smoothed_consistency"}, {}};
  for (std::size_t k = 0; k < curve.n_grid.size(); ++k)
    t.add_row({std::int64_t{curve.n_grid[k]}, curve.raw[k], curve.smoothed[k]});
  emit_table(t, Format::csv, csv_path);

  nlohmann::ordered_json params = {{"lifetime", curve.params.lifetime},
                                   {"offset", curve.params.offset},
                                   {"t0", curve.params.t0},
                                   {"trials", curve.params.trials},
                                   {"seed", curve.params.seed}};
  write_file(params_sidecar(csv_path), params.dump(2) + "\n");
}

LookupCurve load_lookup(const std::filesystem::path& csv_path) {
  const auto sidecar = params_sidecar(csv_path);
  if (!std::filesystem::exists(csv_path)) throw ValidationError("lookup file not found: " + csv_path.string());
  if (!std::filesystem::exists(sidecar)) throw ValidationError("lookup sidecar not found: " + sidecar.string());

  LookupParams params;
  try {
    const auto j = nlohmann::json::parse(read_file(sidecar));
    params.lifetime = j.at("lifetime").get<int>();
    params.offset = j.at("offset").get<std::int64_t>();
    params.t0 = j.at("t0").get<Cycle>();
    params.trials = j.at("trials").get<std::int64_t>();
    params.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(sidecar.string() + ": " + e.what());
  }

  const auto lines = lines_of(read_file(csv_path));
  if (lines.empty() || trim(lines[0]) != "n,raw_consistency,smoothed_consistency")
    throw ValidationError(csv_path.string() + ": expected header 'n,raw_consistency,smoothed_consistency'");
  std::vector<int> grid;
  std::vector<double> raw;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (trim(lines[k]).empty()) continue;
    const auto fields = split(lines[k]);
    const auto n = fields.size() == 3 ? parse_int(fields[0]) : std::nullopt;
    const auto value = fields.size() == 3 ? parse_double(fields[1]) : std::nullopt;
    if (!n || !value) throw ValidationError(csv_path.string() + ": malformed line " + std::to_string(k + 1));
    grid.push_back(*n);
    raw.push_back(*value);
  }
  return make_lookup(std::move(grid), std::move(raw), params);
}

}  // namespace cbl::fit
