// Drives the installed binary end to end: output tables, manifests,
// determinism, and the exit-code contract (0 ok, 2 validation, 3 numeric).
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

// Every test case works inside its own scratch directory.
class Scratch {
 public:
  Scratch() : prev_(fs::current_path()) {
    dir_ = fs::temp_directory_path() /
           ("ncoadj_cli_" + std::to_string(counter_++));
    fs::create_directories(dir_);
    fs::current_path(dir_);
  }
  ~Scratch() {
    fs::current_path(prev_);
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  const fs::path& dir() const { return dir_; }

 private:
  static inline int counter_ = 0;
  fs::path prev_;
  fs::path dir_;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(NCOADJ_CLI_PATH) + " " + args +
                          " >cli_stdout.txt 2>cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp("cli_stdout.txt");
  r.err = slurp("cli_stderr.txt");
  return r;
}

void write_trial(const fs::path& p) {
  std::ofstream f(p);
  f << "A,Y,X,N\n"
       "1,5.2,1.1,0.3\n"
       "1,4.8,0.2,-0.1\n"
       "1,6.1,1.9,0.6\n"
       "1,5.5,0.8,0.2\n"
       "1,4.1,-0.7,-0.5\n"
       "1,5.9,1.3,0.1\n"
       "0,3.2,0.9,0.4\n"
       "0,2.1,-0.3,-0.2\n"
       "0,4.0,1.5,0.5\n"
       "0,2.8,0.1,-0.3\n"
       "0,3.5,0.7,0.0\n"
       "0,2.2,-0.9,-0.6\n";
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("estimate: table, anchor row, manifest sidecar") {
  Scratch tmp;
  write_trial("trial.csv");
  RunResult r = run_cli(
      "estimate --data trial.csv --covariates X --ncos N --out table.csv");
  CHECK(r.code == 0);
  auto rows = lines_of(slurp("table.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] ==
        "adjustment,estimate,se,ci_low,ci_high,variance,"
        "relative_efficiency,p_value");
  CHECK(rows[1].substr(0, 5) == "none,");
  // the unadjusted row anchors relative efficiency at exactly 1
  CHECK(rows[1].find(",1,") != std::string::npos);
  CHECK(rows[2].substr(0, 4) == "cov,");
  CHECK(rows[3].substr(0, 4) == "nco,");
  CHECK(rows[4].substr(0, 8) == "cov+nco,");

  json m = json::parse(slurp("table.csv.manifest.json"));
  CHECK(m["subcommand"] == "estimate");
  CHECK(m["parameters"]["correction"] == "hc3");
  CHECK(m["parameters"]["n"] == 12);
  CHECK(m["outputs"][0] == "table.csv");
  CHECK(m["warnings"].empty());
}

TEST_CASE("estimate: JSON table parses and mirrors the CSV") {
  Scratch tmp;
  write_trial("trial.csv");
  RunResult csv = run_cli("estimate --data trial.csv --adjust none");
  RunResult js = run_cli("estimate --data trial.csv --adjust none --json");
  CHECK(csv.code == 0);
  CHECK(js.code == 0);
  json rows = json::parse(js.out);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["adjustment"] == "none");
  CHECK(rows[0]["relative_efficiency"] == 1.0);
  const double est = rows[0]["estimate"].get<double>();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", est);
  CHECK(lines_of(csv.out)[1].find(buf) != std::string::npos);
}

TEST_CASE("pretest: deterministic given a seed, warns on constant NCO") {
  Scratch tmp;
  write_trial("trial.csv");
  const std::string args =
      "pretest --data trial.csv --ncos N --pretest equiv "
      "--epsilon-rule sd:0.5 --B 500 --seed 9";
  RunResult a = run_cli(args);
  RunResult b = run_cli(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  auto rows = lines_of(a.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "nco,kind,p,p_lower,p_upper,epsilon,reject,decision");

  // constant NCO: usable report plus an explicit warning
  {
    std::ofstream f("flat.csv");
    f << "A,Y,N\n1,1,7\n1,2,7\n1,3,7\n0,4,7\n0,5,7\n0,6,7\n";
  }
  RunResult w = run_cli("pretest --data flat.csv --ncos N --seed 1");
  CHECK(w.code == 0);
  CHECK(w.err.find("constant") != std::string::npos);
  CHECK(w.out.find(",1,") != std::string::npos);  // sharp p = 1
  CHECK(w.out.find("adjusted") != std::string::npos);
  json m = json::parse(slurp("ncoadj_manifest.json"));
  REQUIRE(m["warnings"].size() == 1);
  CHECK(std::string(m["warnings"][0]).find("constant") != std::string::npos);
}

TEST_CASE("test: exhaustive mode reported on a small trial") {
  Scratch tmp;
  write_trial("trial.csv");
  RunResult r = run_cli(
      "test --data trial.csv --covariates X --ncos N --approach model");
  CHECK(r.code == 0);
  auto rows = lines_of(r.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] ==
        "approach,statistic,p,t_obs,mode,evaluated,extreme,failures");
  CHECK(rows[1].find("exhaustive") != std::string::npos);
  CHECK(rows[1].find(",924,") != std::string::npos);  // C(12,6)
}

TEST_CASE("sensitivity: delta 0 matches the estimate subcommand") {
  Scratch tmp;
  write_trial("trial.csv");
  RunResult sen = run_cli(
      "sensitivity --data trial.csv --covariates X --ncos N "
      "--deltas -0.5,0,0.5");
  RunResult est = run_cli(
      "estimate --data trial.csv --covariates X --ncos N --adjust cov+nco");
  CHECK(sen.code == 0);
  auto rows = lines_of(sen.out);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "delta,estimate,ci_low,ci_high");
  // row "0,<estimate>,...": same value, same formatting path
  const std::string mid = rows[2];
  REQUIRE(mid.substr(0, 2) == "0,");
  const std::string base = mid.substr(2, mid.find(',', 2) - 2);
  CHECK(lines_of(est.out)[2].find(base) != std::string::npos);
}

TEST_CASE("simulate: thread count does not change the results file") {
  Scratch tmp;
  {
    std::ofstream f("grid.json");
    f << R"({"seed": 42, "replicates": 30, "n": 20, "pi": 0.5,
             "rho_yx": 0.3, "rho_yn_given_x": 0.5,
             "estimators": ["plug_in", "nco"], "corrections": ["hc0"]})";
  }
  RunResult one = run_cli("simulate --config grid.json --out a --threads 1");
  RunResult two = run_cli("simulate --config grid.json --out b --threads 2");
  CHECK(one.code == 0);
  CHECK(two.code == 0);
  const std::string csv_a = slurp("a/results.csv");
  CHECK(csv_a == slurp("b/results.csv"));
  CHECK(lines_of(csv_a).size() == 1 + 2 * 7);
  json m = json::parse(slurp("a/manifest.json"));
  CHECK(m["subcommand"] == "simulate");
  CHECK(m["parameters"]["scenarios"] == 1);
  CHECK(m["parameters"]["scenario_seeds"].size() == 1);
}

TEST_CASE("exit codes separate validation from numeric failures") {
  Scratch tmp;
  write_trial("trial.csv");

  // parse error: missing required flag
  CHECK(run_cli("estimate").code == 2);
  // validation: unknown column
  RunResult bad = run_cli("estimate --data trial.csv --covariates Q");
  CHECK(bad.code == 2);
  CHECK(bad.err.find("Q") != std::string::npos);
  // validation: hc2 on a leverage-1 design point
  {
    std::ofstream f("lev.csv");
    f << "A,Y,X\n1,1,0\n1,2,0\n1,3,1\n0,1,0\n0,2,0\n0,3,1\n";
  }
  RunResult lev = run_cli(
      "estimate --data lev.csv --covariates X --adjust cov --correction hc2");
  CHECK(lev.code == 2);
  CHECK(lev.err.find("leverage=1") != std::string::npos);
  // numeric: collinear covariates surface as an internal failure
  {
    std::ofstream f("coll.csv");
    f << "A,Y,X,X2\n1,1,1,2\n1,2,2,4\n1,3,3,6\n1,4,4,8\n"
         "0,1,1,2\n0,2,2,4\n0,3,3,6\n0,4,4,8\n";
  }
  RunResult coll = run_cli(
      "estimate --data coll.csv --covariates X,X2 --adjust cov");
  CHECK(coll.code == 3);
  CHECK(coll.err.find("rank-deficient") != std::string::npos);

  // version and help exit cleanly
  CHECK(run_cli("--version").code == 0);
  CHECK(run_cli("--help").code == 0);
}
