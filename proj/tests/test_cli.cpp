#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "cbl/table.hpp"
#include "cli.hpp"

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cbl::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct Scratch {
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("cbl_cli_" + std::to_string(::getpid()));
  Scratch() { std::filesystem::create_directories(dir); }
  ~Scratch() { std::filesystem::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

const std::vector<std::string> kSmallSim = {"sim", "--n", "4", "--cycles", "120", "--t0", "100", "--trials", "300"};

std::vector<std::string> with(std::vector<std::string> base, const std::vector<std::string>& extra) {
  base.insert(base.end(), extra.begin(), extra.end());
  return base;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"sim", "--bogus"}).code == 1);
  CHECK(cli({"sim", "--n", "0"}).code == 1);
  CHECK(cli({"sim", "--format", "xml"}).code == 1);
  CHECK(cli({"ctmc", "--n", "11"}).code == 1);
  CHECK(cli({"ctmc", "--format", "svg"}).code == 1);
  CHECK(cli({"fit"}).code == 1);
  CHECK(cli({"sim", "--help"}).code == 0);
  CHECK(cli({"--version"}).code == 0);
}

TEST_CASE("consistency curve CSV") {
  const Run r = cli(kSmallSim);
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("t,mean_consistency,samples\n1,", 0) == 0);
  const Run multi = cli({"sim", "--n", "4,10", "--cycles", "120", "--t0", "100", "--trials", "300"});
  CHECK(multi.out.rfind("n,t,mean_consistency,samples\n4,1,", 0) == 0);
  CHECK(multi.out.find("\n10,20,") != std::string::npos);
}

TEST_CASE("CTMC JSON document") {
  const Run r = cli({"ctmc", "--n", "2", "--gin", "1", "--gup", "1", "--gout", "10", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  for (const char* key : {"n", "rates", "num_states", "p_ll", "p_lr", "imbalance", "residual", "steady_state"})
    CHECK(j.contains(key));
  CHECK(j["num_states"] == 32);
  CHECK(j["steady_state"].size() == 32);
  CHECK(j["imbalance"].get<double>() > 0);
}

TEST_CASE("sweep, walk, eq2 and photon tables") {
  const Run sweep = cli({"sweep", "--n", "4,10", "--lifetime", "1,10", "--cycles", "120", "--t0", "100", "--trials",
                         "200"});
  REQUIRE(sweep.code == 0);
  CHECK(sweep.out.rfind("n,lifetime,max_consistency,active_portion\n4,1,", 0) == 0);
  const Run walk = cli({"walk", "--n", "4", "--cycles", "120", "--t0", "100", "--trials", "200", "--traces", "3"});
  REQUIRE(walk.code == 0);
  CHECK(walk.out.rfind("trial_id,first_decision,t,position\n", 0) == 0);
  const Run eq2 = cli({"eq2", "--random", "5"});
  REQUIRE(eq2.code == 0);
  CHECK(std::count(eq2.out.begin(), eq2.out.end(), '\n') == 6);
  const Run curve = cli({"photon", "-R", "10", "--trials", "200", "--cycles", "50"});
  CHECK(curve.out.rfind("t,mean_consistency,surviving_trials\n", 0) == 0);
  const Run summary = cli({"photon", "-R", "5,10", "--trials", "200", "--summary"});
  CHECK(summary.out.rfind("R,max_consistency,active_portion,termination_fraction\n5,", 0) == 0);
}

TEST_CASE("files, manifests and byte-identical reruns") {
  Scratch s;
  for (const char* format : {"csv", "json", "svg"}) {
    const std::string a = s / (std::string("a.") + format), b = s / (std::string("b.") + format);
    REQUIRE(cli(with(kSmallSim, {"--format", format, "--out", a})).code == 0);
    REQUIRE(cli(with(kSmallSim, {"--format", format, "--out", b, "--threads", "3"})).code == 0);
    CHECK(cbl::read_file(a) == cbl::read_file(b));
    const auto m = nlohmann::json::parse(cbl::read_file(a + ".manifest.json"));
    CHECK(m["parameters"]["trials"] == 300);
    CHECK(m["parameters"]["format"] == format);
    CHECK(m["outputs"][0]["path"] == a);
  }
}

TEST_CASE("config file fills unset flags and explicit flags win") {
  Scratch s;
  cbl::write_file(s / "cfg.json", R"({"n": [4, 6], "cycles": 120, "t0": 100, "trials": 50, "max_offset": 5})");
  const Run r = cli({"sim", "--config", s / "cfg.json", "--trials", "80", "--out", s / "c.csv"});
  REQUIRE(r.code == 0);
  const auto m = nlohmann::json::parse(cbl::read_file(s / "c.csv.manifest.json"));
  CHECK(m["parameters"]["n"] == nlohmann::json::array({4, 6}));
  CHECK(m["parameters"]["trials"] == 80);
  CHECK(m["parameters"]["max_offset"] == 5);

  cbl::write_file(s / "bad.json", R"({"nope": 1})");
  CHECK(cli({"sim", "--config", s / "bad.json"}).code == 1);
  cbl::write_file(s / "broken.json", "{");
  CHECK(cli({"sim", "--config", s / "broken.json"}).code == 1);
}

TEST_CASE("seed from the environment") {
  Scratch s;
  ::setenv("CBL_SEED", "7", 1);
  REQUIRE(cli(with(kSmallSim, {"--out", s / "env.csv"})).code == 0);
  REQUIRE(cli(with(kSmallSim, {"--out", s / "flag.csv", "--seed", "7"})).code == 0);
  REQUIRE(cli(with(kSmallSim, {"--out", s / "other.csv", "--seed", "8"})).code == 0);
  ::setenv("CBL_SEED", "not-a-number", 1);
  CHECK(cli(kSmallSim).code == 1);
  ::unsetenv("CBL_SEED");
  CHECK(cbl::read_file(s / "env.csv") == cbl::read_file(s / "flag.csv"));
  CHECK(cbl::read_file(s / "env.csv") != cbl::read_file(s / "other.csv"));
  const auto m = nlohmann::json::parse(cbl::read_file(s / "env.csv.manifest.json"));
  CHECK(m["seed"] == 7);
}

TEST_CASE("lookup and fit round trip through files") {
  Scratch s;
  const std::vector<std::string> lookup_args = {"--lifetime", "10", "--t0", "100", "--trials", "2000",
                                                "--n-min",    "2",  "--n-max", "12"};
  REQUIRE(cli(with({"lookup", "--out", s / "lookup.csv"}, lookup_args)).code == 0);
  CHECK(std::filesystem::exists(s / "lookup.csv.params.json"));
  const auto m = nlohmann::json::parse(cbl::read_file(s / "lookup.csv.manifest.json"));
  CHECK(m["outputs"].size() == 2);

  cbl::write_file(s / "people.csv", "participant_id,consistency\np01,0.9\np02,0.6\np03,0.3\n");
  const Run r = cli({"fit", "--input", s / "people.csv", "--lookup", s / "lookup.csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("participant_id,consistency,estimated_n,flag\np01,0.9,,above_range\np02,0.6,", 0) == 0);
  CHECK(r.out.find("p03,0.3,,below_chance") != std::string::npos);

  cbl::write_file(s / "empty.csv", "participant_id,consistency\n");
  const Run e = cli({"fit", "--input", s / "empty.csv", "--lookup", s / "lookup.csv"});
  CHECK(e.code == 0);
  CHECK(e.err.find("warning") != std::string::npos);
  cbl::write_file(s / "bad.csv", "participant_id,consistency\np01,1.5\n");
  CHECK(cli({"fit", "--input", s / "bad.csv", "--lookup", s / "lookup.csv"}).code == 1);
}
