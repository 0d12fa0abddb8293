// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero if
// any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cbl/ctmc.hpp"
#include "cbl/fit.hpp"
#include "cbl/photon.hpp"
#include "cbl/stats.hpp"
#include "cbl/table.hpp"
#include "cli.hpp"
#include "oracles/dense_solve.hpp"
#include "oracles/printed_equations.hpp"
#include "oracles/reservoir_chain.hpp"

using namespace cbl;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

std::string fmt(double v, int digits = 4) {
  if (std::isnan(v)) return "undefined";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

ReservoirConfig reservoir(int n, int lifetime, Cycle t0, Cycle total, std::int64_t trials) {
  ReservoirConfig c;
  c.n_levels = n;
  c.lifetime = lifetime;
  c.t0 = t0;
  c.total_cycles = total;
  c.trials = trials;
  c.seed = 42;
  return c;
}

ctmc::Rates<double> random_rates(std::uint64_t seed, std::uint64_t k) {
  Rng rng = trial_stream(seed, k);
  auto draw = [&] { return std::pow(10.0, -1.0 + 2.0 * uniform01(rng)); };
  const double gi = draw(), gu = draw(), go = draw();
  return {gi, gu, go};
}

oracle::RateModel oracle_model(int n, const ctmc::Rates<double>& r) {
  return {n, r.gamma_in, r.gamma_up, r.gamma_out};
}

double value_or_nan(const std::optional<double>& v) { return v ? *v : std::nan(""); }

// Criteria 2, 3 and the reservoir half of 11 share these runs.
const std::vector<int> kSizeGrid = {4, 10, 20, 50, 100};
struct SizeRun {
  int n;
  double max_consistency;
  double late_mean;
  double active_portion;
};
std::vector<SizeRun> size_runs;
double size_runs_seconds = 0.0;

const std::vector<SizeRun>& lifetime10_runs() {
  if (size_runs.empty()) {
    const auto start = std::chrono::steady_clock::now();
    for (int n : kSizeGrid) {
      const ReservoirConfig c = reservoir(n, 10, 1000, 1200, 20000);
      const ConsistencyCurve curve = consistency_curve(c, 200);
      size_runs.push_back({n, max_consistency(curve), mean_consistency(curve, 100, 200), active_portion(c).mean_fraction});
    }
    size_runs_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return size_runs;
}

// Criteria 4 and 12 share the default lookup.
std::optional<fit::LookupCurve> default_lookup;
const fit::LookupCurve& lookup() {
  if (!default_lookup) default_lookup = fit::build_lookup(fit::LookupParams{});
  return *default_lookup;
}

std::filesystem::path report_path = "eq2_report.csv";

// ---------------------------------------------------------------------------

Verdict lifetime_one_null() {
  Verdict v;
  for (int n : {4, 100}) {
    const ConsistencyCurve curve = consistency_curve(reservoir(n, 1, 500, 700, 50000), 200);
    const double m = max_consistency(curve);
    v.detail << " N=" << n << " max=" << fmt(m);
    v.require(m >= 0.49 && m <= 0.51, "max consistency in [0.49, 0.51] for N=" + std::to_string(n));
  }
  return v;
}

Verdict size_ordering() {
  Verdict v;
  const auto& runs = lifetime10_runs();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    v.detail << " N=" << runs[k].n << ":" << fmt(runs[k].max_consistency);
    if (k > 0) {
      const double margin = runs[k - 1].max_consistency - runs[k].max_consistency;
      v.require(margin >= 0.005, "margin " + fmt(margin) + " >= 0.005 between N=" + std::to_string(runs[k - 1].n) +
                                     " and N=" + std::to_string(runs[k].n));
    }
  }
  const double span = runs.front().max_consistency - runs.back().max_consistency;
  v.detail << " span=" << fmt(span);
  v.require(span >= 0.05, "maxC(4) - maxC(100) >= 0.05");
  return v;
}

Verdict convergence() {
  Verdict v;
  for (const auto& r : lifetime10_runs()) {
    v.detail << " N=" << r.n << ":" << fmt(r.late_mean);
    v.require(std::abs(r.late_mean - 0.5) <= 0.01, "mean over t in [100, 200] within 0.5 +/- 0.01");
  }
  return v;
}

Verdict lookup_anchor() {
  Verdict v;
  const auto& c = lookup();
  const double first = c.raw.front(), last = c.raw.back();
  v.detail << " raw C(N=2)=" << fmt(first) << " raw C(N=50)=" << fmt(last) << " smoothed " << fmt(c.smoothed.front())
           << ".." << fmt(c.smoothed.back());
  v.require(first >= 0.63 && first <= 0.75, "C(N=2) in [0.63, 0.75]");
  v.require(last >= 0.48 && last <= 0.55, "C(N=50) in [0.48, 0.55]");
  v.require(c.smoothed.front() >= 0.63 && c.smoothed.front() <= 0.75, "smoothed C(N=2) in [0.63, 0.75]");
  v.require(c.smoothed.back() >= 0.48 && c.smoothed.back() <= 0.55, "smoothed C(N=50) in [0.48, 0.55]");
  for (std::size_t k = 1; k < c.smoothed.size(); ++k)
    v.require(c.smoothed[k] <= c.smoothed[k - 1], "smoothed curve non-increasing");
  return v;
}

Verdict rate_matrix_exact() {
  Verdict v;
  const auto order = ctmc::n1_state_order();
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto r = random_rates(5, k);
    const Eigen::MatrixXd q(ctmc::build_model(1, r).generator);
    const auto printed = oracle::printed_rate_matrix(r.gamma_in, r.gamma_up, r.gamma_out);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        const double want = printed[i][j];
        worst = std::max(worst, std::abs(q(order[i], order[j]) - want) / std::max(1.0, std::abs(want)));
      }
  }
  v.detail << " 10 triples, worst relative deviation " << sci(worst);
  v.require(worst <= 1e-12, "entrywise relative deviation <= 1e-12");
  return v;
}

Verdict steady_state_quality() {
  Verdict v;
  double worst_residual = 0.0, worst_norm = 0.0, worst_oracle = 0.0;
  for (int n = 1; n <= 3; ++n)
    for (std::uint64_t k = 0; k < 10; ++k) {
      const auto r = random_rates(6, k + 100 * static_cast<std::uint64_t>(n));
      const auto model = ctmc::build_model(n, r);
      const auto ss = ctmc::steady_state(model);
      const auto ref = oracle::stationary(oracle_model(n, r).generator());
      worst_residual = std::max(worst_residual, ss.residual);
      worst_norm = std::max(worst_norm, std::abs(ss.pi.sum() - 1.0));
      for (std::size_t s = 0; s < ref.size(); ++s)
        worst_oracle = std::max(worst_oracle, std::abs(ss.pi(static_cast<Eigen::Index>(s)) - ref[s]));
    }
  v.detail << " N=1..3 x 10 triples: max residual " << sci(worst_residual) << ", max |sum-1| " << sci(worst_norm)
           << ", max |pi-oracle| " << sci(worst_oracle);
  v.require(worst_residual <= 1e-10, "residual <= 1e-10");
  v.require(worst_norm <= 1e-12, "sum within 1e-12");
  v.require(worst_oracle <= 1e-10, "oracle agreement <= 1e-10");
  return v;
}

Verdict imbalance_signs() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  auto imbalance = [](int n, double gi, double gu, double go) {
    return ctmc::decision_transition_stats(ctmc::build_model(n, ctmc::Rates<double>{gi, gu, go})).imbalance;
  };
  const double a = imbalance(2, 1, 1, 10), b = imbalance(2, 1, 10, 1);
  v.detail << " N=2 (1,1,10):" << fmt(a, 5) << " (1,10,1):" << fmt(b, 5) << " N=1:";
  v.require(a > 0, "N=2 (1,1,10) imbalance > 0");
  v.require(b <= 0.02, "N=2 (1,10,1) imbalance <= 0.02");
  for (const auto& t : std::vector<std::array<double, 3>>{{1, 1, 1}, {10, 1, 1}, {1, 10, 1}, {1, 1, 10}}) {
    const double m = imbalance(1, t[0], t[1], t[2]);
    v.detail << " " << fmt(m, 5);
    v.require(m <= 0, "N=1 imbalance <= 0");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  v.require(secs < 10, "runtime < 10 s");
  return v;
}

Verdict closed_form_report() {
  Verdict v;
  Table report{{"gamma_in", "gamma_up", "gamma_out", "eq2", "eq2_hand", "imbalance", "p_ll", "p_lr",
                "sign_agreement", "relation"},
               {}};
  double worst = 0.0;
  int agree = 0, plus = 0, minus = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto r = random_rates(8, k);
    const auto model = ctmc::build_model(1, r);
    const auto ss = ctmc::steady_state(model);
    const double eq2 = ctmc::eq2_evaluate(r, ss.pi);
    const auto m = oracle::printed_rate_matrix(r.gamma_in, r.gamma_up, r.gamma_out);
    oracle::Matrix q(8, std::vector<double>(8));
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) q[i][j] = m[i][j];
    const auto p = oracle::stationary(q);
    std::array<double, 8> pa{};
    std::copy(p.begin(), p.end(), pa.begin());
    const double hand = oracle::printed_imbalance(r.gamma_in, r.gamma_up, r.gamma_out, pa);
    worst = std::max(worst, std::abs(eq2 - hand) / std::max(1.0, std::abs(hand)));

    const auto st = ctmc::decision_transition_stats(model);
    const bool same_sign = (eq2 > 0) == (st.imbalance > 0);
    agree += same_sign;
    const double tol = 1e-9 * std::max(1.0, std::abs(st.imbalance));
    std::string relation = "neither";
    if (std::abs(eq2 - st.imbalance) <= tol) relation = "+imbalance", ++plus;
    if (std::abs(eq2 + st.imbalance) <= tol) relation = "-imbalance", ++minus;
    report.add_row({r.gamma_in, r.gamma_up, r.gamma_out, eq2, hand, st.imbalance, st.p_ll, st.p_lr,
                    std::string(same_sign ? "yes" : "no"), relation});
  }
  emit_table(report, Format::csv, report_path);
  v.detail << " worst |eq2-hand| " << sci(worst) << "; informational: sign agreement " << agree
           << "/20, equals +imbalance " << plus << "/20, -imbalance " << minus << "/20; report "
           << report_path.string();
  v.require(worst <= 1e-12, "printed expression reproduced to 1e-12");
  return v;
}

Verdict photon_first_step() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  for (int r : {5, 10, 50, 100}) {
    const auto curve = photon::photon_consistency_curve(photon::PhotonConfig{r, 500, 100000, 42});
    const double c = std::cos(std::numbers::pi / 4 - std::numbers::pi / r);
    const double got = value_or_nan(curve.at(1));
    v.detail << " R=" << r << ":" << fmt(got) << " vs " << fmt(c * c);
    v.require(std::abs(got - c * c) <= 0.01, "within 0.01 of cos^2(pi/4 - pi/R) at R=" + std::to_string(r));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  v.require(secs < 60, "runtime < 1 min");
  return v;
}

Verdict photon_shape() {
  Verdict v;
  const auto r5 = photon::analyze(photon::PhotonConfig{5, 500, 100000, 42});
  const auto r50 = photon::analyze(photon::PhotonConfig{50, 500, 100000, 42});
  const double first = value_or_nan(r5.curve.at(1));
  const double at50 = value_or_nan(r5.curve.at(50));
  const auto survivors = r5.curve.samples[49];
  v.detail << " maxC R=5:" << fmt(r5.summary.max_consistency) << " R=50:" << fmt(r50.summary.max_consistency)
           << "; R=5 C(1)=" << fmt(first) << " C(50)=" << fmt(at50) << " (" << survivors
           << " surviving trials at offset 50)";
  v.require(r5.summary.max_consistency > r50.summary.max_consistency, "maxC(R=5) > maxC(R=50)");
  v.require(!std::isnan(at50) && at50 < first, "R=5 consistency at offset 50 defined and below offset 1");
  return v;
}

Verdict active_portions() {
  Verdict v;
  v.detail << " reservoir N:";
  const auto& runs = lifetime10_runs();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    v.detail << " " << fmt(runs[k].active_portion);
    if (k > 0) v.require(runs[k].active_portion < runs[k - 1].active_portion, "decreasing in N");
  }
  v.detail << "; lifetime:";
  double previous = -1.0;
  for (int lt : {1, 5, 10, 15, 20}) {
    const double a = active_portion(reservoir(4, lt, 1000, 1200, 20000)).mean_fraction;
    v.detail << " " << fmt(a);
    if (lt == 1) v.require(a == 0.0, "lifetime 1 gives exactly 0");
    v.require(a > previous, "increasing in lifetime");
    previous = a;
  }
  v.detail << "; photon R:";
  previous = 2.0;
  for (int r : {5, 10, 50, 100, 500}) {
    const auto s = photon::analyze(photon::PhotonConfig{r, 500, 20000, 42}).summary;
    v.detail << " " << fmt(s.active_portion) << "(term " << fmt(s.termination_fraction, 3) << ")";
    v.require(s.active_portion < previous, "photon active portion strictly decreasing at R=" + std::to_string(r));
    previous = s.active_portion;
  }
  return v;
}

Verdict fit_round_trip() {
  Verdict v;
  const auto& curve = lookup();
  fit::LookupParams truth = curve.params;
  truth.seed = 20240601;
  truth.trials = 200000;
  for (int n : {4, 10, 20, 40}) {
    const double c = fit::simulate_consistency(n, truth);
    const auto r = fit::estimate_reservoir_size(c, curve);
    const double tol = std::max(3.0, 0.2 * n);
    v.detail << " N=" << n << ": C=" << fmt(c) << " -> ";
    if (r.estimated_n) {
      v.detail << *r.estimated_n;
      v.require(std::abs(*r.estimated_n - n) <= tol, "|est - " + std::to_string(n) + "| <= " + fmt(tol, 1));
    } else {
      v.detail << fit::to_string(r.flag);
      v.require(false, "estimate for N=" + std::to_string(n));
    }
  }
  return v;
}

Verdict determinism() {
  Verdict v;
  const auto dir = std::filesystem::temp_directory_path() / ("cbl_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"sim", {"sim", "--n", "4", "--lifetime", "10", "--trials", "20000"}},
      {"sweep", {"sweep", "--n", "4,100", "--lifetime", "1", "--t0", "500", "--cycles", "700", "--trials", "50000"}},
      {"walk", {"walk", "--n", "4", "--traces", "20"}},
      {"ctmc", {"ctmc", "--n", "1,2", "--gin", "1", "--gup", "1", "--gout", "1,10"}},
      {"eq2", {"eq2", "--random", "20"}},
      {"photon", {"photon", "-R", "5,10,50,100", "--trials", "100000"}},
      {"lookup", {"lookup", "--n-min", "2", "--n-max", "8"}},
  };
  std::ostringstream sink;
  int files = 0;
  for (const auto& [name, args] : commands) {
    for (const char* format : {"csv", "json", "svg"}) {
      if (name == "eq2" && std::string(format) == "svg") continue;
      std::vector<std::string> outputs;
      for (const char* run : {"a", "b"}) {
        auto full = args;
        const auto path = dir / (name + "_" + run + "." + format);
        full.insert(full.end(), {"--format", format, "--out", path.string()});
        if (std::string(run) == "b") full.insert(full.end(), {"--threads", "3"});
        const int code = cli::run_cli(full, sink, sink);
        v.require(code == 0, name + " " + format + " exited " + std::to_string(code));
        outputs.push_back(code == 0 ? read_file(path) : std::string());
      }
      v.require(!outputs[0].empty() && outputs[0] == outputs[1], name + " " + format + " byte-identical");
      ++files;
    }
  }
  std::filesystem::remove_all(dir);
  v.detail << " " << files << " output pairs (7 subcommands x csv/json/svg, second run with --threads 3)";
  return v;
}

Verdict exact_chain() {
  Verdict v;
  const oracle::ChainConfig chain{1, 2};
  const int trials = 100000, cycles = 8;
  const auto exact = oracle::outcome_marginals(chain, cycles);
  std::vector<std::array<int, 3>> seen(cycles, {0, 0, 0});
  const ReservoirConfig c = reservoir(1, 2, 5, cycles + 1, trials);
  for (int t = 0; t < trials; ++t) {
    int k = 0;
    drive_trial(c, t, cycles, [&](const DecisionEvent& e) { ++seen[k++][static_cast<int>(e.outcome)]; });
  }
  double worst_z = 0.0;
  int comparisons = 0;
  for (int k = 0; k < cycles; ++k)
    for (int o = 0; o < 3; ++o) {
      const double p = exact[k][o];
      const double f = static_cast<double>(seen[k][o]) / trials;
      const double sigma = std::sqrt(p * (1 - p) / trials);
      ++comparisons;
      if (sigma == 0.0) {
        v.require(f == p, "deterministic outcome frequency at cycle " + std::to_string(k + 1));
        continue;
      }
      worst_z = std::max(worst_z, std::abs(f - p) / sigma);
    }
  // Consistency between the decisions at cycles 5 and 7.
  const auto pair = oracle::pair_probability(chain, 5, 2);
  const auto curve = consistency_curve(c, 2);
  const double p = pair.consistency();
  const double n = static_cast<double>(curve.samples[1]);
  const double z = std::abs(value_or_nan(curve.at(2)) - p) / std::sqrt(p * (1 - p) / n);
  worst_z = std::max(worst_z, z);
  v.detail << " " << comparisons << " per-cycle outcome frequencies + offset-2 consistency (exact " << fmt(p)
           << ", simulated " << fmt(value_or_nan(curve.at(2))) << "); worst |z| " << fmt(worst_z, 2);
  v.require(worst_z <= 3.0, "within 3 sigma");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  for (int k = 1; k + 1 < argc; ++k)
    if (std::string(argv[k]) == "--report") report_path = argv[k + 1];

  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
    double max_seconds;  // 0: no runtime bound
  };
  const std::vector<Criterion> criteria = {
      {1, "lifetime-1 null result", lifetime_one_null, 60},
      {2, "size ordering", size_ordering, 120},
      {3, "convergence to 0.5", convergence, 0},
      {4, "lookup anchor (offset 8, lifetime 10)", lookup_anchor, 0},
      {5, "N=1 rate matrix exactness", rate_matrix_exact, 0},
      {6, "steady-state quality", steady_state_quality, 0},
      {7, "imbalance signs", imbalance_signs, 10},
      {8, "closed-form report", closed_form_report, 0},
      {9, "photon first-step closed form", photon_first_step, 60},
      {10, "photon qualitative shape", photon_shape, 0},
      {11, "active portions", active_portions, 0},
      {12, "fit round-trip", fit_round_trip, 0},
      {13, "determinism", determinism, 0},
      {14, "exact-chain oracle (N=1, lifetime 2)", exact_chain, 0},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // Shared runs are charged to the first criterion that needs them.
    if (c.id == 2) secs = std::max(secs, size_runs_seconds);
    if (c.max_seconds > 0 && secs >= c.max_seconds) {
      v.pass = false;
      v.detail << " [violated: runtime " << fmt(secs, 1) << " s >= " << c.max_seconds << " s]";
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "):" << v.detail.str()
              << "  [" << fmt(secs, 1) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
