#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "cbl/ctmc.hpp"
#include "cbl/error.hpp"
#include "cbl/fit.hpp"
#include "cbl/manifest.hpp"
#include "cbl/parallel.hpp"
#include "cbl/photon.hpp"
#include "cbl/stats.hpp"
#include "cbl/svg.hpp"
#include "cbl/table.hpp"

namespace cbl::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kSeedEnv = "CBL_SEED";

/// Everything a subcommand produces; rendering and writing happen afterwards.
struct Output {
  Table table;
  std::optional<json> document;  // replaces the table in JSON output
  std::optional<ChartSpec> chart;
  json params = json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
  std::function<void(const std::filesystem::path&)> save_csv;  // custom CSV writer
};

struct Common {
  std::string format = "csv";
  std::string out;
  std::string config;
  unsigned threads = 0;
};

struct ReservoirOpts {
  std::vector<int> n{4};
  std::vector<int> lifetime{10};
  Cycle cycles = 1200;
  Cycle t0 = 1000;
  std::int64_t trials = 20000;
  std::uint64_t seed = 42;
  std::int64_t max_offset = 0;  // 0: cycles - t0
  std::int64_t traces = 20;
};

struct RateOpts {
  std::vector<int> n{2};
  std::vector<double> gin{1.0};
  std::vector<double> gup{1.0};
  std::vector<double> gout{1.0};
  int random = 0;
  std::uint64_t seed = 42;
};

struct PhotonOpts {
  std::vector<int> resolution{10};
  std::int64_t cycles = 500;
  std::int64_t trials = 20000;
  std::uint64_t seed = 42;
  bool summary = false;
};

struct FitOpts {
  std::string input;
  std::string lookup;
  fit::LookupParams params;
  int n_min = 2;
  int n_max = 50;
};

// ---------------------------------------------------------------------------
// Option plumbing

void add_common(CLI::App& sub, Common& c) {
  sub.add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json", "svg"}));
  sub.add_option("--out", c.out, "Output file (default: stdout, no manifest)");
  sub.add_option("--config", c.config, "Flat JSON file of flag values; explicit flags win");
  sub.add_option("--threads", c.threads, "Worker threads (0: hardware concurrency)");
}

CLI::Option* add_seed(CLI::App& sub, std::uint64_t& seed) {
  return sub.add_option("--seed", seed, std::string("RNG seed (default from ") + kSeedEnv + ", else 42)");
}

std::vector<std::string> config_values(const std::string& key, const nlohmann::json& v) {
  auto scalar = [&](const nlohmann::json& e) -> std::string {
    if (e.is_string()) return e.get<std::string>();
    if (e.is_boolean()) return e.get<bool>() ? "true" : "false";
    if (e.is_number()) return e.dump();
    throw ValidationError("config key '" + key + "' must hold a scalar or an array of scalars");
  };
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(scalar(e));
  } else {
    out.push_back(scalar(v));
  }
  return out;
}

/// Fills options not given on the command line from a flat JSON object.
void apply_config(CLI::App& sub, const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError(path + ": config must be a flat JSON object");
  for (const auto& [key, value] : doc.items()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (flag == "config") throw ValidationError(path + ": config files cannot nest");
    CLI::Option* opt = sub.get_option_no_throw("--" + flag);
    if (opt == nullptr) throw ValidationError(path + ": unknown key '" + key + "' for '" + sub.get_name() + "'");
    if (opt->count() > 0) continue;
    opt->add_result(config_values(key, value));
    opt->run_callback();
  }
}

void apply_seed_env(CLI::Option* seed) {
  if (seed->count() > 0) return;
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr || *env == '\0') return;
  try {
    seed->add_result(std::string(env));
    seed->run_callback();
  } catch (const CLI::ParseError&) {
    throw ValidationError(std::string(kSeedEnv) + " must be an unsigned 64-bit integer");
  }
}

// ---------------------------------------------------------------------------
// Subcommands

ReservoirConfig reservoir_config(const ReservoirOpts& o, int n, int lifetime) {
  ReservoirConfig c;
  c.n_levels = n;
  c.lifetime = lifetime;
  c.total_cycles = o.cycles;
  c.t0 = o.t0;
  c.trials = o.trials;
  c.seed = o.seed;
  c.validate();
  return c;
}

std::int64_t resolved_max_offset(const ReservoirOpts& o) { return o.max_offset > 0 ? o.max_offset : o.cycles - o.t0; }

json reservoir_params(const ReservoirOpts& o) {
  return {{"n", o.n},         {"lifetime", o.lifetime}, {"cycles", o.cycles}, {"t0", o.t0},
          {"trials", o.trials}, {"seed", o.seed},       {"max_offset", resolved_max_offset(o)}};
}

template <class T>
T single(const std::vector<T>& v, const char* flag) {
  if (v.size() != 1) throw ValidationError(std::string(flag) + " takes exactly one value here");
  return v.front();
}

Output run_sim(const ReservoirOpts& o) {
  const int lifetime = single(o.lifetime, "--lifetime");
  const std::int64_t max_offset = resolved_max_offset(o);
  const bool multi = o.n.size() > 1;
  Output out;
  out.table.columns = {"t", "mean_consistency", "samples"};
  if (multi) out.table.columns.insert(out.table.columns.begin(), "n");
  out.chart = ChartSpec{"Decision consistency", "cycles after t0", "consistency", {}};
  for (int n : o.n) {
    const ConsistencyCurve curve = consistency_curve(reservoir_config(o, n, lifetime), max_offset);
    Series s{"N=" + std::to_string(n), {}, {}};
    for (std::size_t k = 0; k < curve.size(); ++k) {
      std::vector<Cell> row{curve.offsets[k], curve.mean[k], curve.samples[k]};
      if (multi) row.insert(row.begin(), std::int64_t{n});
      out.table.add_row(std::move(row));
      s.x.push_back(static_cast<double>(curve.offsets[k]));
      s.y.push_back(curve.mean[k]);
    }
    out.chart->series.push_back(std::move(s));
  }
  out.params = reservoir_params(o);
  out.seed = o.seed;
  return out;
}

Output run_sweep(const ReservoirOpts& o) {
  std::vector<ReservoirConfig> grid;
  for (int n : o.n)
    for (int l : o.lifetime) grid.push_back(reservoir_config(o, n, l));
  const auto rows = sweep(grid, resolved_max_offset(o));

  Output out;
  out.table.columns = {"n", "lifetime", "max_consistency", "active_portion"};
  for (const auto& r : rows)
    out.table.add_row({std::int64_t{r.n_levels}, std::int64_t{r.lifetime}, r.max_consistency, r.active_portion});

  const bool by_n = o.n.size() > 1;
  out.chart = ChartSpec{"Maximum consistency", by_n ? "N" : "lifetime", "max consistency", {}};
  const auto& outer = by_n ? o.lifetime : o.n;
  for (int key : outer) {
    Series s{(by_n ? "lifetime=" : "N=") + std::to_string(key), {}, {}};
    for (const auto& r : rows) {
      if ((by_n ? r.lifetime : r.n_levels) != key) continue;
      s.x.push_back(by_n ? r.n_levels : r.lifetime);
      s.y.push_back(r.max_consistency);
    }
    out.chart->series.push_back(std::move(s));
  }
  out.params = reservoir_params(o);
  out.seed = o.seed;
  return out;
}

Output run_walk(const ReservoirOpts& o) {
  if (o.traces < 1) throw ValidationError("--traces must be >= 1");
  const ReservoirConfig config = reservoir_config(o, single(o.n, "--n"), single(o.lifetime, "--lifetime"));
  const std::int64_t max_offset = resolved_max_offset(o);
  const auto traces = walk_traces(config, o.traces, max_offset);

  Output out;
  out.table.columns = {"trial_id", "first_decision", "t", "position"};
  out.chart = ChartSpec{"Random walk of decisions", "cycles after t0", "position (L: +1, R: -1)", {}};
  for (const auto& tr : traces) {
    Series s{"trial " + std::to_string(tr.trial_id), {}, {}};
    for (std::size_t k = 0; k < tr.positions.size(); ++k) {
      out.table.add_row({tr.trial_id, std::string(1, to_char(tr.first_decision)), static_cast<std::int64_t>(k),
                         tr.positions[k]});
      s.x.push_back(static_cast<double>(k));
      s.y.push_back(static_cast<double>(tr.positions[k]));
    }
    out.chart->series.push_back(std::move(s));
  }
  out.params = reservoir_params(o);
  out.params["traces"] = o.traces;
  out.seed = o.seed;
  return out;
}

Output run_ctmc(const RateOpts& o) {
  struct Point {
    int n;
    ctmc::Rates<double> rates;
  };
  std::vector<Point> points;
  for (int n : o.n)
    for (double gi : o.gin)
      for (double gu : o.gup)
        for (double go : o.gout) points.push_back({n, {gi, gu, go}});

  Output out;
  out.table.columns = {"n", "gamma_in", "gamma_up", "gamma_out", "num_states", "p_ll", "p_lr", "imbalance", "residual"};
  json docs = json::array();
  for (const auto& p : points) {
    const auto model = ctmc::build_model(p.n, p.rates);
    const auto ss = ctmc::steady_state(model);
    const auto st = ctmc::decision_transition_stats(model, ss.pi, ctmc::next_decision_probs(model, ArrowKind::L),
                                                    ctmc::next_decision_probs(model, ArrowKind::R));
    const auto states = static_cast<std::int64_t>(model.num_states());
    out.table.add_row({std::int64_t{p.n}, p.rates.gamma_in, p.rates.gamma_up, p.rates.gamma_out, states, st.p_ll,
                       st.p_lr, st.imbalance, ss.residual});
    docs.push_back({{"n", p.n},
                    {"rates",
                     {{"gamma_in", p.rates.gamma_in}, {"gamma_up", p.rates.gamma_up}, {"gamma_out", p.rates.gamma_out}}},
                    {"num_states", states},
                    {"p_ll", st.p_ll},
                    {"p_lr", st.p_lr},
                    {"p_rl", st.p_rl},
                    {"p_rr", st.p_rr},
                    {"imbalance", st.imbalance},
                    {"residual", ss.residual},
                    {"steady_state", std::vector<double>(ss.pi.data(), ss.pi.data() + ss.pi.size())}});
  }
  out.document = docs.size() == 1 ? docs.front() : docs;

  // Imbalance against whichever rate is being swept, one line per N.
  const std::vector<double>* axis = nullptr;
  std::string axis_name;
  int varying = 0;
  for (const auto& [values, name] : {std::pair{&o.gin, "gamma_in"}, {&o.gup, "gamma_up"}, {&o.gout, "gamma_out"}}) {
    if (values->size() < 2) continue;
    ++varying;
    axis = values;
    axis_name = name;
  }
  if (varying != 1) axis = nullptr;
  if (axis != nullptr) {
    out.chart = ChartSpec{"Decision transition imbalance", axis_name, "P(L->L) - P(L->R)", {}};
    for (std::size_t i = 0; i < o.n.size(); ++i) {
      Series s{"N=" + std::to_string(o.n[i]), {}, {}};
      for (std::size_t k = 0; k < axis->size(); ++k) {
        s.x.push_back((*axis)[k]);
        s.y.push_back(std::get<double>(out.table.rows[i * axis->size() + k][7]));
      }
      out.chart->series.push_back(std::move(s));
    }
  }
  out.params = {{"n", o.n}, {"gin", o.gin}, {"gup", o.gup}, {"gout", o.gout}};
  return out;
}

std::string eq2_relation(double eq2, double imbalance) {
  const double tol = 1e-9 * std::max(1.0, std::abs(imbalance));
  if (std::abs(eq2 - imbalance) <= tol) return "+imbalance";
  if (std::abs(eq2 + imbalance) <= tol) return "-imbalance";
  return "neither";
}

Output run_eq2(const RateOpts& o) {
  if (o.random < 0) throw ValidationError("--random must be >= 0");
  std::vector<ctmc::Rates<double>> triples;
  if (o.random > 0) {
    // Log-uniform rates in [0.1, 10].
    for (int k = 0; k < o.random; ++k) {
      Rng rng = trial_stream(o.seed, static_cast<std::uint64_t>(k));
      auto draw = [&] { return std::pow(10.0, -1.0 + 2.0 * uniform01(rng)); };
      const double gi = draw(), gu = draw(), go = draw();
      triples.push_back({gi, gu, go});
    }
  } else {
    triples.push_back({single(o.gin, "--gin"), single(o.gup, "--gup"), single(o.gout, "--gout")});
  }

  Output out;
  out.table.columns = {"gamma_in", "gamma_up", "gamma_out", "eq2", "imbalance", "p_ll", "p_lr", "sign_agreement",
                       "relation"};
  for (const auto& r : triples) {
    const auto model = ctmc::build_model(1, r);
    const auto ss = ctmc::steady_state(model);
    const auto st = ctmc::decision_transition_stats(model, ss.pi, ctmc::next_decision_probs(model, ArrowKind::L),
                                                    ctmc::next_decision_probs(model, ArrowKind::R));
    const double eq2 = ctmc::eq2_evaluate(r, ss.pi);
    const bool agree = (eq2 > 0) == (st.imbalance > 0);
    out.table.add_row({r.gamma_in, r.gamma_up, r.gamma_out, eq2, st.imbalance, st.p_ll, st.p_lr,
                       std::string(agree ? "yes" : "no"), eq2_relation(eq2, st.imbalance)});
  }
  if (o.random > 0) {
    out.params = {{"random", o.random}, {"seed", o.seed}};
    out.seed = o.seed;
  } else {
    out.params = {{"gin", o.gin}, {"gup", o.gup}, {"gout", o.gout}};
  }
  return out;
}

Output run_photon(const PhotonOpts& o) {
  Output out;
  const bool multi = o.resolution.size() > 1;
  std::vector<photon::PhotonAnalysis> results;
  for (int r : o.resolution) {
    photon::PhotonConfig c{r, o.cycles, o.trials, o.seed};
    c.validate();
    results.push_back(photon::analyze(c));
  }
  if (o.summary) {
    out.table.columns = {"R", "max_consistency", "active_portion", "termination_fraction"};
    Series maxc{"max consistency", {}, {}}, active{"active portion", {}, {}};
    for (const auto& a : results) {
      const auto& s = a.summary;
      out.table.add_row({std::int64_t{s.resolution}, s.max_consistency, s.active_portion, s.termination_fraction});
      maxc.x.push_back(s.resolution);
      maxc.y.push_back(s.max_consistency);
      active.x.push_back(s.resolution);
      active.y.push_back(s.active_portion);
    }
    out.chart = ChartSpec{"Single-photon decision maker", "R", "value", {maxc, active}};
  } else {
    out.table.columns = {"t", "mean_consistency", "surviving_trials"};
    if (multi) out.table.columns.insert(out.table.columns.begin(), "R");
    out.chart = ChartSpec{"Single-photon decision consistency", "cycles after the first decision", "consistency", {}};
    for (const auto& a : results) {
      Series s{"R=" + std::to_string(a.summary.resolution), {}, {}};
      for (std::size_t k = 0; k < a.curve.size(); ++k) {
        std::vector<Cell> row{a.curve.offsets[k], a.curve.mean[k], a.curve.samples[k]};
        if (multi) row.insert(row.begin(), std::int64_t{a.summary.resolution});
        out.table.add_row(std::move(row));
        s.x.push_back(static_cast<double>(a.curve.offsets[k]));
        s.y.push_back(a.curve.mean[k]);
      }
      out.chart->series.push_back(std::move(s));
    }
  }
  out.params = {{"resolution", o.resolution}, {"cycles", o.cycles}, {"trials", o.trials}, {"seed", o.seed},
                {"summary", o.summary}};
  out.seed = o.seed;
  return out;
}

std::vector<int> lookup_grid(const FitOpts& o) {
  if (o.n_min < 1 || o.n_max < o.n_min) throw ValidationError("need 1 <= --n-min <= --n-max");
  std::vector<int> grid;
  for (int n = o.n_min; n <= o.n_max; ++n) grid.push_back(n);
  return grid;
}

json lookup_params(const FitOpts& o) {
  return {{"lifetime", o.params.lifetime}, {"offset", o.params.offset}, {"t0", o.params.t0},
          {"trials", o.params.trials},     {"seed", o.params.seed},     {"n_min", o.n_min},
          {"n_max", o.n_max}};
}

Output run_lookup(const FitOpts& o) {
  const fit::LookupCurve curve = fit::build_lookup(o.params, lookup_grid(o));
  Output out;
  out.table.columns = {"n", "raw_consistency", "smoothed_consistency"};
  Series raw{"simulated", {}, {}}, smooth{"isotonic", {}, {}};
  for (std::size_t k = 0; k < curve.n_grid.size(); ++k) {
    out.table.add_row({std::int64_t{curve.n_grid[k]}, curve.raw[k], curve.smoothed[k]});
    raw.x.push_back(curve.n_grid[k]);
    raw.y.push_back(curve.raw[k]);
    smooth.x.push_back(curve.n_grid[k]);
    smooth.y.push_back(curve.smoothed[k]);
  }
  out.chart = ChartSpec{"Consistency lookup", "N", "consistency at offset " + std::to_string(o.params.offset),
                        {raw, smooth}};
  out.save_csv = [curve](const std::filesystem::path& p) { fit::save_lookup(curve, p); };
  out.params = lookup_params(o);
  out.seed = o.params.seed;
  return out;
}

Output run_fit(const FitOpts& o) {
  if (o.input.empty()) throw ValidationError("fit: --input is required");
  const fit::IngestResult ingest = fit::ingest_csv(o.input);
  const fit::LookupCurve curve =
      o.lookup.empty() ? fit::build_lookup(o.params, lookup_grid(o)) : fit::load_lookup(o.lookup);
  const auto results = fit::fit_all(ingest.records, curve);

  Output out;
  out.warnings = ingest.warnings;
  out.table.columns = {"participant_id", "consistency", "estimated_n", "flag"};
  for (const auto& r : results) {
    const Cell n = r.estimated_n ? Cell{std::int64_t{*r.estimated_n}} : Cell{};
    out.table.add_row({r.participant_id, r.consistency, n, std::string(fit::to_string(r.flag))});
  }
  out.params = {{"input", o.input}, {"input_sha256", sha256_file(o.input)}};
  if (o.lookup.empty()) {
    out.params["lookup"] = lookup_params(o);
  } else {
    out.params["lookup_file"] = o.lookup;
    out.params["lookup_sha256"] = sha256_file(o.lookup);
  }
  out.seed = curve.params.seed;
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

std::string render(const Output& o, Format format, const std::string& command) {
  switch (format) {
    case Format::csv: return to_csv(o.table);
    case Format::json: return o.document ? o.document->dump(2) + "\n" : to_json(o.table);
    case Format::svg:
      if (!o.chart) throw ValidationError("svg output is not available for '" + command + "'");
      return render_svg(*o.chart);
  }
  return {};
}

void deliver(const Output& o, const Common& c, const std::string& command, const std::vector<std::string>& args,
             std::ostream& stdout_stream) {
  const Format format = parse_format(c.format);
  if (c.out.empty()) {
    stdout_stream << render(o, format, command);
    return;
  }
  const std::filesystem::path path = c.out;
  std::vector<std::filesystem::path> written{path};
  if (format == Format::csv && o.save_csv) {
    o.save_csv(path);
    written.push_back(fit::params_sidecar(path));
  } else {
    write_file(path, render(o, format, command));
  }
  RunManifest m;
  for (const auto& a : args) m.command += (m.command.empty() ? "" : " ") + a;
  m.parameters = o.params;
  m.parameters["format"] = c.format;
  m.seed = o.seed;
  write_manifest(std::move(m), written);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local reservoir choice-based learning toolkit", "cbl"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  ReservoirOpts res;
  RateOpts rates;
  PhotonOpts ph;
  FitOpts fo;
  std::vector<std::pair<CLI::App*, CLI::Option*>> seeds;

  auto reservoir_sub = [&](const char* name, const char* help, bool lists) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(*sub, common);
    auto* n = sub->add_option("--n", res.n, "Reservoir size N");
    auto* l = sub->add_option("--lifetime", res.lifetime, "Recovery lifetime in cycles");
    if (lists) {
      n->delimiter(',');
      l->delimiter(',');
    }
    sub->add_option("--cycles", res.cycles, "Cycles per trial");
    sub->add_option("--t0", res.t0, "Reference cycle");
    sub->add_option("--trials", res.trials, "Independent trials");
    sub->add_option("--max-offset", res.max_offset, "Largest offset after t0 (default cycles - t0)");
    seeds.emplace_back(sub, add_seed(*sub, res.seed));
    return sub;
  };
  CLI::App* sim = reservoir_sub("sim", "Consistency curve(s) of the Monte Carlo reservoir", true);
  CLI::App* sweep_cmd = reservoir_sub("sweep", "Max consistency and active portion over N x lifetime", true);
  CLI::App* walk = reservoir_sub("walk", "Random-walk traces of decisions after t0", false);
  walk->add_option("--traces", res.traces, "Number of traces");

  auto rate_sub = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(*sub, common);
    sub->add_option("--gin", rates.gin, "gamma_in (refill rate)")->delimiter(',');
    sub->add_option("--gup", rates.gup, "gamma_up (excitation rate)")->delimiter(',');
    sub->add_option("--gout", rates.gout, "gamma_out (decay rate)")->delimiter(',');
    return sub;
  };
  CLI::App* ctmc_cmd = rate_sub("ctmc", "Exact decision-transition statistics of the rate equation");
  ctmc_cmd->add_option("--n", rates.n, "Reservoir size N")->delimiter(',');
  CLI::App* eq2 = rate_sub("eq2", "Closed-form N = 1 expression against the first-passage imbalance");
  eq2->add_option("--random", rates.random, "Report on this many random rate triples instead");
  seeds.emplace_back(eq2, add_seed(*eq2, rates.seed));

  CLI::App* photon_cmd = app.add_subcommand("photon", "Single-photon decision maker");
  add_common(*photon_cmd, common);
  photon_cmd->add_option("--resolution,-R", ph.resolution, "Waveplate resolution R (delta = pi/R)")->delimiter(',');
  photon_cmd->add_option("--cycles", ph.cycles, "Decisions per trial");
  photon_cmd->add_option("--trials", ph.trials, "Independent trials");
  photon_cmd->add_flag("--summary", ph.summary, "Per-R summary instead of the per-cycle curve");
  seeds.emplace_back(photon_cmd, add_seed(*photon_cmd, ph.seed));

  auto lookup_opts = [&](CLI::App* sub) {
    sub->add_option("--lifetime", fo.params.lifetime, "Lifetime of the simulated reservoirs");
    sub->add_option("--offset", fo.params.offset, "Offset after t0 at which consistency is read");
    sub->add_option("--t0", fo.params.t0, "Reference cycle");
    sub->add_option("--trials", fo.params.trials, "Trials per grid point");
    sub->add_option("--n-min", fo.n_min, "Smallest N of the grid");
    sub->add_option("--n-max", fo.n_max, "Largest N of the grid");
    seeds.emplace_back(sub, add_seed(*sub, fo.params.seed));
  };
  CLI::App* fit_cmd = app.add_subcommand("fit", "Estimate reservoir sizes from observed consistency");
  add_common(*fit_cmd, common);
  fit_cmd->add_option("--input", fo.input, "CSV with header participant_id,consistency");
  fit_cmd->add_option("--lookup", fo.lookup, "Saved lookup CSV (otherwise one is simulated)");
  lookup_opts(fit_cmd);
  CLI::App* lookup = app.add_subcommand("lookup", "Simulate and save the consistency-vs-N lookup curve");
  add_common(*lookup, common);
  lookup_opts(lookup);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    CLI::App* sub = app.get_subcommands().front();
    if (!common.config.empty()) apply_config(*sub, common.config);
    for (auto& [owner, seed] : seeds)
      if (owner == sub) apply_seed_env(seed);
    set_worker_threads(common.threads);

    const std::string name = sub->get_name();
    Output result;
    if (sub == sim) result = run_sim(res);
    else if (sub == sweep_cmd) result = run_sweep(res);
    else if (sub == walk) result = run_walk(res);
    else if (sub == ctmc_cmd) result = run_ctmc(rates);
    else if (sub == eq2) result = run_eq2(rates);
    else if (sub == photon_cmd) result = run_photon(ph);
    else if (sub == fit_cmd) result = run_fit(fo);
    else result = run_lookup(fo);

    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    deliver(result, common, name, args, out);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace cbl::cli
