// End-to-end checks of the installed command surface: exit-code contract,
// byte-reproducibility of seeded commands, and the full pipeline.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = CONTROLGEN_CLI;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "controlgen_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

RunResult run(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const fs::path err = work_dir() / "stderr.txt";
  const std::string cmd =
      kCli + " " + args + " > " + out.string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace

TEST_CASE("synth: deterministic outputs, then the whole pipeline runs") {
  const fs::path dir = work_dir();
  const std::string data1 = (dir / "d1").string();
  const std::string data2 = (dir / "d2").string();
  const std::string synth_flags =
      " --seed 7 --stations 20 --routes 5 --days 365 --concentration 8 --out ";

  REQUIRE(run("synth" + synth_flags + data1).exit_code == 0);
  REQUIRE(run("synth" + synth_flags + data2).exit_code == 0);
  for (const char* f : {"network.json", "ridership.csv", "sightings.csv"}) {
    CHECK(slurp(fs::path(data1) / f) == slurp(fs::path(data2) / f));
    CHECK(!slurp(fs::path(data1) / f).empty());
  }

  // analyze
  const std::string an = (dir / "analysis").string();
  const RunResult ar = run("analyze --network " + data1 + "/network.json" +
                           " --sightings " + data1 + "/sightings.csv --out " + an);
  REQUIRE(ar.exit_code == 0);
  const json report = json::parse(slurp(fs::path(an) / "report.json"));
  CHECK(report.contains("station_share"));
  CHECK(report.contains("presence_prob"));
  CHECK(report.contains("heatmap"));
  CHECK(report.contains("inside_rate"));
  CHECK(report.at("predictability").contains("accuracy"));
  CHECK(report.at("predictability").contains("entropy_bits"));
  CHECK(fs::exists(fs::path(an) / "station_share.csv"));
  CHECK(fs::exists(fs::path(an) / "heatmap.csv"));

  // train (reduced epochs to keep the suite fast)
  const std::string model = (dir / "model.json").string();
  const RunResult tr = run(
      "train --network " + data1 + "/network.json --ridership " + data1 +
      "/ridership.csv --budget 240 --sequences 80 --pretrain-epochs 300 "
      "--gan-epochs 20 --seed 1 --out " + model);
  REQUIRE(tr.exit_code == 0);

  // generate twice: byte-identical
  const std::string traces1 = (dir / "t1.jsonl").string();
  const std::string traces2 = (dir / "t2.jsonl").string();
  const std::string gen_flags = " --model " + model + " --network " + data1 +
                                "/network.json --ridership " + data1 +
                                "/ridership.csv --n 40 --budget 240 --seed 3 --out ";
  REQUIRE(run("generate" + gen_flags + traces1).exit_code == 0);
  REQUIRE(run("generate" + gen_flags + traces2).exit_code == 0);
  const std::string bytes = slurp(traces1);
  CHECK(bytes == slurp(traces2));
  CHECK(!bytes.empty());

  // evaluate
  const std::string report_path = (dir / "report.json").string();
  const RunResult ev = run("evaluate --network " + data1 + "/network.json" +
                           " --ridership " + data1 + "/ridership.csv --sightings " +
                           data1 + "/sightings.csv --traces " + traces1 +
                           " --out " + report_path);
  REQUIRE(ev.exit_code == 0);
  const json rep = json::parse(slurp(report_path));
  for (const char* key : {"ks", "dispersion_rmse", "payoff_delta",
                          "predictability_delta", "shares_before", "shares_after"}) {
    CHECK(rep.contains(key));
  }
  CHECK(rep.at("ks").contains("d_stat"));
  CHECK(rep.at("ks").contains("significant_at_05"));
}

TEST_CASE("exit codes: usage errors are 2, domain errors are 1") {
  const fs::path dir = work_dir();
  // below minimum station count: usage error
  CHECK(run("synth --stations 2 --out " + (dir / "x").string()).exit_code == 2);
  // unknown flag
  CHECK(run("synth --nope 1").exit_code == 2);
  // missing subcommand
  CHECK(run("").exit_code == 2);
  // help is success
  CHECK(run("--help").exit_code == 0);

  // domain error: budget below the minimum dwell
  const std::string data = (dir / "d1").string();
  const RunResult r = run("train --network " + data + "/network.json --ridership " +
                          data + "/ridership.csv --budget 5 --pretrain-epochs 10 "
                          "--gan-epochs 0 --out " + (dir / "m.json").string());
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("BudgetTooSmall") != std::string::npos);

  // domain error: unreadable input file
  CHECK(run("analyze --network /nonexistent.json --sightings /nonexistent.csv")
            .exit_code == 1);
}

TEST_CASE("simulate: one-shot pipeline emits a full report") {
  const fs::path dir = work_dir();
  const std::string out = (dir / "sim").string();
  const RunResult r = run(
      "simulate --stations 10 --routes 3 --days 120 --sequences 60 "
      "--pretrain-epochs 200 --gan-epochs 10 --n 30 --seed 5 --out " + out);
  REQUIRE(r.exit_code == 0);
  for (const char* f : {"network.json", "ridership.csv", "sightings.csv",
                        "model.json", "traces.jsonl", "report.json"}) {
    CHECK(fs::exists(fs::path(out) / f));
  }
  const json rep = json::parse(slurp(fs::path(out) / "report.json"));
  CHECK(rep.contains("payoff_delta"));
  CHECK(rep.contains("predictability_delta"));
}
