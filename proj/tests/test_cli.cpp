// Copyright 2026 The kinex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kinex/cli.hpp"
#include "kinex/error.hpp"
#include "kinex/io.hpp"
#include "kinex/random.hpp"

using namespace kinex;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("KINEX_TMP");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "kinex-cli";
  const fs::path p = root / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::vector<std::vector<double>> csv_numbers(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
      row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(exit_code(ErrorCode::InvalidParameter) == 2);
  CHECK(exit_code(ErrorCode::InvalidData) == 2);
  CHECK(exit_code(ErrorCode::InvalidPopulation) == 2);
  CHECK(exit_code(ErrorCode::CorruptedState) == 3);
  CHECK(exit_code(ErrorCode::InternalInvariantFailure) == 3);
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("simulate writes snapshots and metadata") {
  const fs::path dir = scratch("sim");
  const Result r = run({"simulate", "--model", "saving", "--lambda", "0.5",
                        "--agents", "1000", "--steps", "1e5", "--seed", "7",
                        "--out", dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const std::string snaps = slurp(dir / "snapshots.csv");
  CHECK(snaps.rfind("step,agent_id,balance\n", 0) == 0);
  CHECK(fs::exists(dir / "entropy.csv"));
  CHECK(fs::exists(dir / "summary.csv"));
  const json meta = json::parse(slurp(dir / "meta.json"));
  CHECK(meta["spec"]["model"] == "saving");
  CHECK(meta["spec"]["lambda"] == 0.5);
  CHECK(meta["spec"]["agents"] == 1000);
  CHECK(meta["spec"]["steps"] == 100000);
  CHECK(meta["spec"]["seed"] == 7);
  CHECK(meta.contains("created"));

  // Snapshot CSVs round-trip bit for bit.
  std::istringstream in(snaps);
  const InputTable t = read_table(in, "snapshots.csv");
  REQUIRE(t.snapshots);
  const auto rows = csv_numbers(snaps);
  std::size_t k = 0;
  for (const auto& [step, balances] : t.balances)
    for (double b : balances) {
      REQUIRE(rows[k][0] == static_cast<double>(step));
      REQUIRE(rows[k][2] == b);
      ++k;
    }
  CHECK(k == rows.size());
}

TEST_CASE("out-of-range parameters exit with 2") {
  const fs::path dir = scratch("bad");
  const Result r = run({"simulate", "--model", "proportional", "--gamma", "1.2",
                        "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("gamma") != std::string::npos);
  CHECK(run({"simulate", "--model", "saving", "--out", dir.string()}).code == 2);
  CHECK(run({"simulate", "--model", "saving", "--lambda", "0.5", "--gamma",
             "0.2", "--out", dir.string()})
            .code == 2);
  CHECK(run({"simulate", "--model", "proportional", "--gamma", "0.3",
             "--credit", "limit", "--max_debt", "10", "--out", dir.string()})
            .code == 2);
  CHECK(run({"simulate", "--model", "saving", "--lambda", "0.5"}).code == 2);
  CHECK(run({"simulate", "--model", "nope", "--out", dir.string()}).code == 2);
}

TEST_CASE("replica outputs do not depend on the worker count") {
  std::vector<fs::path> dirs;
  for (const std::string workers : {"1", "3"}) {
    const fs::path dir = scratch("rep" + workers);
    const Result r = run({"simulate", "--model", "random-fraction", "--agents",
                          "300", "--steps", "50000", "--stride", "10000",
                          "--seed", "11", "--replicas", "4", "--workers",
                          workers, "--deterministic", "--out", dir.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    dirs.push_back(dir);
  }
  for (int k = 0; k < 4; ++k) {
    const std::string name = "replica-00" + std::to_string(k);
    for (const char* file : {"snapshots.csv", "entropy.csv", "summary.csv"}) {
      const std::string a = slurp(dirs[0] / name / file);
      CHECK(!a.empty());
      CHECK(a == slurp(dirs[1] / name / file));
    }
  }
  CHECK(slurp(dirs[0] / "meta.json") == slurp(dirs[1] / "meta.json"));
  CHECK(slurp(dirs[0] / "replica-000" / "snapshots.csv") !=
        slurp(dirs[0] / "replica-001" / "snapshots.csv"));
}

TEST_CASE("config files merge with flags and reject unknown keys") {
  const fs::path dir = scratch("config");
  spit(dir / "good.json",
       "{\n  \"model\": \"fixed-amount\",\n  \"delta\": 2,\n  \"agents\": 100,\n"
       "  \"steps\": 1000,\n  \"deterministic\": true\n}\n");
  const Result ok = run({"simulate", "--config", (dir / "good.json").string(),
                         "--agents", "50", "--out", (dir / "run").string()});
  REQUIRE_MESSAGE(ok.code == 0, ok.err);
  const json meta = json::parse(slurp(dir / "run" / "meta.json"));
  CHECK(meta["spec"]["agents"] == 50);
  CHECK(meta["spec"]["delta"] == 2.0);
  CHECK_FALSE(meta.contains("created"));

  spit(dir / "bad.json",
       "{\n  \"model\": \"saving\",\n  \"lambda\": 0.5,\n  \"lamda\": 0.5\n}\n");
  const Result bad = run({"simulate", "--config", (dir / "bad.json").string(),
                          "--out", (dir / "run2").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("lamda") != std::string::npos);
  CHECK(bad.err.find("bad.json:4:") != std::string::npos);

  spit(dir / "broken.json", "{\n  \"model\": \"saving\",\n  \"lambda\": ,\n}\n");
  const Result broken = run({"simulate", "--config",
                             (dir / "broken.json").string(), "--out",
                             (dir / "run3").string()});
  CHECK(broken.code == 2);
  CHECK(broken.err.find("broken.json:3:") != std::string::npos);
  spit(dir / "typed.json", "{\n  \"model\": \"saving\",\n  \"agents\": \"many\"\n}\n");
  const Result typed = run({"simulate", "--config", (dir / "typed.json").string(),
                            "--out", (dir / "run4").string()});
  CHECK(typed.code == 2);
  CHECK(typed.err.find("typed.json:3:") != std::string::npos);
  CHECK(run({"fp", "--config", (dir / "good.json").string()}).code == 2);
}

TEST_CASE("analyze fits a snapshot file") {
  const fs::path dir = scratch("analyze");
  REQUIRE(run({"simulate", "--model", "random-fraction", "--agents", "2000",
               "--steps", "2e6", "--stride", "1e6", "--out", dir.string()})
              .code == 0);
  const Result r = run({"analyze", "--in", (dir / "snapshots.csv").string(),
                        "--final", "--fit", "exponential"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const json doc = json::parse(r.out);
  CHECK(doc["step"] == 2000000);
  const json& rep = doc["reports"][0];
  CHECK(rep["model"] == "exponential");
  CHECK(rep["params"]["T"].get<double>() == doctest::Approx(1000.0).epsilon(1e-9));
  CHECK(rep.contains("stderr"));
  CHECK(rep.contains("goodness"));
  CHECK(rep.contains("range"));
  CHECK(rep["n"] == 2000);

  const Result at0 = run({"analyze", "--in", (dir / "snapshots.csv").string(),
                          "--step", "0", "--entropy"});
  REQUIRE(at0.code == 0);
  CHECK(json::parse(at0.out)["reports"][0]["entropy"] == 0.0);
  CHECK(run({"analyze", "--in", (dir / "snapshots.csv").string(), "--step",
             "17", "--entropy"})
            .code == 2);
}

TEST_CASE("analyze two-class and Lorenz on an income file") {
  const fs::path dir = scratch("income");
  RngStream rng(21);
  std::ostringstream csv;
  csv << "id,value\n";
  for (int k = 0; k < 100000; ++k) {
    const double x = rng.uniform() < 0.97 ? rng.exponential(40000.0)
                                          : rng.pareto(1.5, 120000.0);
    csv << k << ',' << format_number(x) << '\n';
  }
  spit(dir / "income.csv", csv.str());
  const Result r = run({"analyze", "--in", (dir / "income.csv").string(),
                        "--fit", "two-class", "--lorenz", "--out",
                        (dir / "out").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const json doc = json::parse(slurp(dir / "out" / "report.json"));
  const json& tc = doc["reports"][0];
  for (const char* key : {"T", "alpha", "r_star", "f"})
    CHECK(tc["params"].contains(key));
  CHECK(tc["params"]["T"].get<double>() == doctest::Approx(40000).epsilon(0.03));
  const double g = doc["reports"][1]["gini"].get<double>();
  CHECK(g > 0.5);
  CHECK(g < 0.7);
  CHECK(slurp(dir / "out" / "lorenz.csv").rfind("x,y\n", 0) == 0);
}

TEST_CASE("malformed and empty inputs exit with 2") {
  const fs::path dir = scratch("malformed");
  spit(dir / "empty.csv", "");
  const Result e = run({"analyze", "--in", (dir / "empty.csv").string(),
                        "--fit", "exponential"});
  CHECK(e.code == 2);
  spit(dir / "header.csv", "value\n");
  CHECK(run({"analyze", "--in", (dir / "header.csv").string(), "--lorenz"}).code == 2);
  spit(dir / "bad.csv", "value\n1\n2\nthree\n4\n");
  const Result b = run({"analyze", "--in", (dir / "bad.csv").string(),
                        "--lorenz"});
  CHECK(b.code == 2);
  CHECK(b.err.find("row 4") != std::string::npos);
  spit(dir / "ragged.csv", "id,value\n1,2\n2\n");
  const Result g = run({"analyze", "--in", (dir / "ragged.csv").string(),
                        "--lorenz"});
  CHECK(g.code == 2);
  CHECK(g.err.find("row 3") != std::string::npos);
  CHECK(run({"analyze", "--in", (dir / "missing.csv").string(), "--lorenz"})
            .code == 2);
  spit(dir / "few.csv", "value\n1\n2\n3\n");
  CHECK(run({"analyze", "--in", (dir / "few.csv").string(), "--fit",
             "exponential"})
            .code == 2);
  const Result few = run({"analyze", "--in", (dir / "few.csv").string(),
                          "--fit", "exponential", "--min-samples", "1"});
  REQUIRE(few.code == 0);
  CHECK(json::parse(few.out)["reports"][0]["params"]["T"] == 2.0);
}

TEST_CASE("sweep reports theory columns") {
  const Result lam = run({"sweep", "--param", "lambda", "--values",
                          "0.25,0.5,0.75", "--agents", "1000", "--steps", "2e5"});
  REQUIRE_MESSAGE(lam.code == 0, lam.err);
  std::istringstream in(lam.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "param,value,statistic,fitted,stderr,theory,deviation");
  std::vector<double> theory;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    REQUIRE(f.size() == 7);
    CHECK(f[0] == "lambda");
    CHECK(f[2] == "beta");
    theory.push_back(std::stod(f[5]));
  }
  CHECK(theory == std::vector<double>{1.0, 3.0, 9.0});

  const Result gam = run({"sweep", "--param", "gamma", "--values",
                          "0.3333333333333333,0.5", "--agents", "1000",
                          "--steps", "1e5"});
  REQUIRE_MESSAGE(gam.code == 0, gam.err);
  CHECK(gam.out.find(",0.70951") != std::string::npos);

  const Result bank = run({"sweep", "--param", "reserve_ratio", "--values",
                           "0.5,0.8", "--agents", "1000", "--steps", "1e6"});
  REQUIRE_MESSAGE(bank.code == 0, bank.err);
  std::vector<std::pair<std::string, double>> theory_cols;
  {
    std::istringstream in(bank.out);
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) f.push_back(cell);
      REQUIRE(f.size() == 7);
      theory_cols.emplace_back(f[2], std::stod(f[5]));
    }
  }
  REQUIRE(theory_cols.size() == 4);
  const std::vector<std::pair<std::string, double>> expected{
      {"T_plus", 2000}, {"T_minus", 1000}, {"T_plus", 1250}, {"T_minus", 250}};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(theory_cols[k].first == expected[k].first);
    CHECK(theory_cols[k].second == doctest::Approx(expected[k].second).epsilon(1e-12));
  }
  CHECK(run({"sweep", "--param", "delta", "--values", "1"}).code == 2);
}

TEST_CASE("fp subcommand") {
  const Result e = run({"fp", "--A0", "1", "--B0", "1000"});
  REQUIRE_MESSAGE(e.code == 0, e.err);
  CHECK(e.out.rfind("r,density,exponential\n", 0) == 0);
  for (const auto& row : csv_numbers(e.out))
    REQUIRE(std::abs(row[1] - row[2]) <= 1e-10 * row[2] + 1e-300);

  const Result p = run({"fp", "--a", "0.4", "--b", "1", "--A0", "0", "--B0",
                        "0", "--rmin", "1", "--rmax", "1e4"});
  REQUIRE_MESSAGE(p.code == 0, p.err);
  const auto prow = csv_numbers(p.out);
  const double slope = std::log(prow.back()[1] / prow.front()[1]) /
                       std::log(prow.back()[0] / prow.front()[0]);
  CHECK(slope == doctest::Approx(-2.4).epsilon(1e-8));

  const Result full = run({"fp", "--A0", "1", "--a", "0.4", "--B0", "1000",
                           "--b", "1"});
  REQUIRE_MESSAGE(full.code == 0, full.err);
  CHECK(full.out.rfind("r,density,interpolating\n", 0) == 0);
  for (const auto& row : csv_numbers(full.out))
    REQUIRE(std::abs(row[1] - row[2]) <= 1e-6 * row[2] + 1e-300);

  CHECK(run({"fp", "--a", "-2", "--b", "1", "--rmin", "1"}).code == 2);
  CHECK(run({"fp", "--A0", "0", "--a", "0", "--B0", "1"}).code == 2);

  // The density file reads back as a weighted distribution.
  std::istringstream in(full.out);
  const InputTable t = read_table(in, "fp.csv");
  const auto rows = csv_numbers(full.out);
  REQUIRE(t.values.size() == rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    REQUIRE(t.values.samples[k] == rows[k][0]);
    REQUIRE(t.values.weights[k] == rows[k][1]);
  }
}

TEST_CASE("hierarchy and family subcommands") {
  const fs::path dir = scratch("hier");
  const Result h = run({"hierarchy", "--levels", "30", "--branching", "2",
                        "--base", "1", "--factor", "2", "--out",
                        (dir / "h").string()});
  REQUIRE_MESSAGE(h.code == 0, h.err);
  const json rep = json::parse(slurp(dir / "h" / "report.json"));
  CHECK(rep["theory"]["slope"] == doctest::Approx(-1.0));
  CHECK(rep["params"]["slope"].get<double>() == doctest::Approx(-1.0).epsilon(0.02));
  const Result round = run({"analyze", "--in", (dir / "h" / "hierarchy.csv").string(),
                            "--fit", "ccdf-loglog", "--lo", "1", "--hi", "536870912"});
  REQUIRE_MESSAGE(round.code == 0, round.err);
  CHECK(json::parse(round.out)["reports"][0]["params"]["slope"] == rep["params"]["slope"]);

  const Result add = run({"hierarchy", "--levels", "25", "--branching", "3",
                          "--base", "100", "--step", "10"});
  REQUIRE_MESSAGE(add.code == 0, add.err);
  const json ar = json::parse(add.out);
  CHECK(ar["params"]["T"].get<double>() ==
        doctest::Approx(ar["theory"]["T"].get<double>()).epsilon(0.05));
  CHECK(run({"hierarchy", "--levels", "5", "--step", "1", "--factor", "2"}).code == 2);

  RngStream rng(3);
  std::ostringstream csv;
  csv << "value\n";
  for (int k = 0; k < 20000; ++k) csv << format_number(rng.exponential(100.0)) << '\n';
  spit(dir / "incomes.csv", csv.str());
  const Result f = run({"family", "--in", (dir / "incomes.csv").string(), "--out",
                        (dir / "f").string()});
  REQUIRE_MESSAGE(f.code == 0, f.err);
  const json fr = json::parse(slurp(dir / "f" / "report.json"));
  CHECK(fr["pairs"] == 10000);
  CHECK(fr["gini"].get<double>() == doctest::Approx(0.375).epsilon(0.05));
  CHECK(std::abs(fr["gamma"]["params"]["beta"].get<double>() - 1.0) < 0.1);
  const Result again = run({"analyze", "--in", (dir / "f" / "family.csv").string(), "--lorenz"});
  REQUIRE(again.code == 0);
  CHECK(json::parse(again.out)["reports"][0]["gini"] == fr["gini"]);
}
