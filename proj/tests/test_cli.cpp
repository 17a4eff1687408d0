// End-to-end tests of the command-line interface; each test drives the real
// binary through a shell and inspects files and exit codes.
#include "whittlefit/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

struct CliFixture {
  fs::path dir;
  CliFixture() {
    dir = fs::temp_directory_path() /
          ("wf_cli_" + std::to_string(::getpid()) + "_" +
           std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(dir);
  }
  ~CliFixture() { fs::remove_all(dir); }

  std::string file(const std::string& name) const { return (dir / name).string(); }

  RunResult run(const std::string& args) const {
    const std::string out_file = file("_stdout"), err_file = file("_stderr");
    const std::string cmd = std::string(WHITTLEFIT_CLI_PATH) + " " + args + " >" +
                            out_file + " 2>" + err_file;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(status);
    auto slurp = [](const std::string& p) {
      std::ifstream in(p);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
  }
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  json j;
  in >> j;
  return j;
}

std::string slurp_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("fit on a simulated fixture recovers the range") {
  CliFixture t;
  RunResult sim = t.run(
      "simulate --model matern --params '{\"sigma\":1.0,\"nu\":0.5,\"rho\":10.0}' "
      "--dims 64,64 --seed 7 --out " + t.file("field.f64"));
  REQUIRE(sim.exit_code == 0);

  RunResult fit = t.run(
      "fit --data " + t.file("field.f64") +
      " --model matern --params "
      "'{\"sigma\":{\"value\":1.0,\"fixed\":true},\"nu\":{\"value\":0.5,\"fixed\":true},"
      "\"rho\":{\"value\":5.0,\"lower\":1.0,\"upper\":40.0}}' "
      "--no-se --out " + t.file("fit.json"));
  CHECK(fit.exit_code == 0);
  json res = read_json_file(t.file("fit.json"));
  const double rho = res["theta"]["rho"].get<double>();
  CHECK(rho > 8.0);
  CHECK(rho < 12.0);
  CHECK(res["converged"] == true);

  SUBCASE("standard variant underestimates on the same fixture") {
    RunResult std_fit = t.run(
        "fit --data " + t.file("field.f64") +
        " --variant standard --model matern --params "
        "'{\"sigma\":{\"value\":1.0,\"fixed\":true},\"nu\":{\"value\":0.5,\"fixed\":true},"
        "\"rho\":{\"value\":5.0,\"lower\":1.0,\"upper\":40.0}}' "
        "--no-se --out " + t.file("fit_std.json"));
    CHECK(std_fit.exit_code == 0);
    const double rho_std =
        read_json_file(t.file("fit_std.json"))["theta"]["rho"].get<double>();
    CHECK(rho_std < rho);
  }

  SUBCASE("byte-identical rerun (reproducibility)") {
    RunResult again = t.run(
        "fit --data " + t.file("field.f64") +
        " --model matern --params "
        "'{\"sigma\":{\"value\":1.0,\"fixed\":true},\"nu\":{\"value\":0.5,\"fixed\":true},"
        "\"rho\":{\"value\":5.0,\"lower\":1.0,\"upper\":40.0}}' "
        "--no-se --out " + t.file("fit2.json"));
    CHECK(again.exit_code == 0);
    CHECK(slurp_bytes(t.file("fit.json")) == slurp_bytes(t.file("fit2.json")));
  }
}

TEST_CASE("NaN missing data and an explicit mask file give the same estimate") {
  CliFixture t;
  const std::string params = "'{\"sigma\":1.0,\"rho\":3.0}'";
  REQUIRE(t.run("simulate --model exponential --params " + params +
                " --dims 32,32 --seed 3 --mask bernoulli:0.7:5 --missing nan "
                "--out " + t.file("nan.f64")).exit_code == 0);
  REQUIRE(t.run("simulate --model exponential --params " + params +
                " --dims 32,32 --seed 3 --mask bernoulli:0.7:5 --missing mask "
                "--out " + t.file("masked.f64")).exit_code == 0);

  const std::string fit_args =
      " --model exponential --params "
      "'{\"sigma\":{\"value\":1.0,\"fixed\":true},\"rho\":{\"value\":2.0}}' --no-se ";
  REQUIRE(t.run("fit --data " + t.file("nan.f64") + fit_args + "--out " +
                t.file("a.json")).exit_code == 0);
  REQUIRE(t.run("fit --data " + t.file("masked.f64") + fit_args + "--out " +
                t.file("b.json")).exit_code == 0);
  const double rho_a = read_json_file(t.file("a.json"))["theta"]["rho"].get<double>();
  const double rho_b = read_json_file(t.file("b.json"))["theta"]["rho"].get<double>();
  CHECK(rho_a == doctest::Approx(rho_b).epsilon(1e-12));
}

TEST_CASE("expected-periodogram of white noise is constant") {
  CliFixture t;
  REQUIRE(t.run("expected-periodogram --model white_noise --params '{\"sigma\":2.0}' "
                "--dims 8,8 --out " + t.file("ibar.f64")).exit_code == 0);
  wf::io::FieldMeta meta;
  wf::RealField f = wf::io::read_field(t.file("ibar.f64"), &meta);
  CHECK(meta.domain == "frequency");
  const double expect = 4.0 / (4.0 * M_PI * M_PI);
  CHECK(f.values.minCoeff() == doctest::Approx(expect).epsilon(1e-12));
  CHECK(f.values.maxCoeff() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("self-check flags run clean on a fixture") {
  CliFixture t;
  REQUIRE(t.run("simulate --model exponential --params '{\"sigma\":1.0,\"rho\":2.0}' "
                "--dims 16,16 --seed 9 --mask circle:14 --missing nan --out " +
                t.file("f.f64")).exit_code == 0);
  RunResult per = t.run("periodogram --data " + t.file("f.f64") +
                        " --self-check --out " + t.file("I.f64"));
  CHECK(per.exit_code == 0);
  CHECK(per.err.find("\"parseval\":true") != std::string::npos);
  RunResult exp = t.run(
      "expected-periodogram --model exponential --params "
      "'{\"sigma\":1.0,\"rho\":2.0}' --dims 16,16 --mask circle:14 --self-check "
      "--out " + t.file("Ibar.f64"));
  CHECK(exp.exit_code == 0);
  CHECK(exp.err.find("\"positive\":true") != std::string::npos);
}

TEST_CASE("recentred output is a permutation of the plain one") {
  CliFixture t;
  REQUIRE(t.run("simulate --model exponential --params '{\"sigma\":1.0,\"rho\":2.0}' "
                "--dims 8,8 --seed 2 --out " + t.file("f.f64")).exit_code == 0);
  REQUIRE(t.run("periodogram --data " + t.file("f.f64") + " --out " +
                t.file("plain.f64")).exit_code == 0);
  REQUIRE(t.run("periodogram --data " + t.file("f.f64") + " --recenter --out " +
                t.file("shift.f64")).exit_code == 0);
  wf::io::FieldMeta meta;
  wf::RealField a = wf::io::read_field(t.file("plain.f64"));
  wf::RealField b = wf::io::read_field(t.file("shift.f64"), &meta);
  CHECK(meta.centered);
  CHECK(a.values.sum() == doctest::Approx(b.values.sum()).epsilon(1e-12));
  CHECK(a.values.minCoeff() == doctest::Approx(b.values.minCoeff()).epsilon(1e-12));
  // DC bin moves to the centre
  const int center[2] = {4, 4};
  CHECK(b.values[a.grid.index_of(center)] == doctest::Approx(a.values[0]));
}

TEST_CASE("diagnose flags the one-row separable sampling failure") {
  CliFixture t;
  // one observed row inside an 8x8 grid
  wf::GridSpec g({8, 8});
  wf::ArrayXd m = wf::ArrayXd::Zero(64);
  for (int i = 0; i < 8; ++i) m[i + 8 * 3] = 1.0;
  wf::io::write_field(t.file("row.f64"), g, m, {});

  RunResult diag = t.run(
      "diagnose --model separable_exponential --params "
      "'{\"sigma\":1.0,\"rho1\":2.0,\"rho2\":3.0}' --dims 8,8 --mask file:" +
      t.file("row.f64") + " --out " + t.file("scc.json"));
  REQUIRE(diag.exit_code == 0);
  json rep = read_json_file(t.file("scc.json"));
  CHECK(rep["identifiability_warning"] == true);
  CHECK(rep["hscc_min_eig"].get<double>() <
        1e-8 * rep["hscc_trace"].get<double>() / 3.0);

  RunResult full = t.run(
      "diagnose --model separable_exponential --params "
      "'{\"sigma\":1.0,\"rho1\":2.0,\"rho2\":3.0}' --dims 8,8 --out " +
      t.file("scc_full.json"));
  REQUIRE(full.exit_code == 0);
  CHECK(read_json_file(t.file("scc_full.json"))["identifiability_warning"] == false);
}

TEST_CASE("stderr command emits a sandwich covariance and intervals") {
  CliFixture t;
  REQUIRE(t.run("simulate --model exponential --params '{\"sigma\":1.0,\"rho\":3.0}' "
                "--dims 32,32 --seed 4 --out " + t.file("f.f64")).exit_code == 0);
  RunResult se = t.run(
      "stderr --data " + t.file("f.f64") +
      " --model exponential --params "
      "'{\"sigma\":{\"value\":1.0,\"fixed\":true},\"rho\":{\"value\":3.0}}' "
      "--mc-samples 200 --seed 12 --out " + t.file("se.json"));
  REQUIRE(se.exit_code == 0);
  json j = read_json_file(t.file("se.json"));
  const double lo = j["ci"]["rho"][0].get<double>();
  const double hi = j["ci"]["rho"][1].get<double>();
  CHECK(lo < 3.0);
  CHECK(hi > 3.0);
  CHECK(j["cov"][0][0].get<double>() > 0.0);

  SUBCASE("standard variant is rejected") {
    RunResult bad = t.run(
        "stderr --data " + t.file("f.f64") +
        " --variant standard --model exponential --params '{\"rho\":3.0}' "
        "--seed 1 --out " + t.file("x.json"));
    CHECK(bad.exit_code == 1);
    CHECK(bad.err.find("error") != std::string::npos);
  }
}

TEST_CASE("benchmark: zero replicates give an empty CSV with header, exit 0") {
  CliFixture t;
  RunResult r = t.run("benchmark --scenario fig1-desk --reps 0 --seed 1 --sizes 16 "
                      "--out " + t.file("empty.csv"));
  CHECK(r.exit_code == 0);
  std::ifstream in(t.file("empty.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("record,scenario,method,size,replicate", 0) == 0);
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("row,", 0) == 0) ++rows;
  CHECK(rows == 0);
}

TEST_CASE("benchmark summary matches an independent recomputation from rows") {
  CliFixture t;
  RunResult r = t.run(
      "benchmark --scenario circle-desk --reps 8 --seed 5 --sizes 24 --threads 2 "
      "--out " + t.file("bench.csv"));
  REQUIRE(r.exit_code == 0);

  std::ifstream in(t.file("bench.csv"));
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> estimates;
  double bias = 0.0, sd = 0.0, rmse = 0.0;
  int n_ok = -1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f[0] == "row" && f[7] == "ok") estimates.push_back(std::stod(f[5]));
    if (f[0] == "summary") {
      bias = std::stod(f[8]);
      sd = std::stod(f[9]);
      rmse = std::stod(f[10]);
      n_ok = std::stoi(f[11]);
    }
  }
  REQUIRE(static_cast<int>(estimates.size()) == n_ok);
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= estimates.size();
  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  var /= estimates.size();
  CHECK(bias == doctest::Approx(mean - 3.0).epsilon(1e-12));
  CHECK(sd == doctest::Approx(std::sqrt(var)).epsilon(1e-10));
  CHECK(rmse == doctest::Approx(std::sqrt(var + bias * bias)).epsilon(1e-10));

  SUBCASE("same seed gives identical estimates even with other thread counts") {
    RunResult again = t.run(
        "benchmark --scenario circle-desk --reps 8 --seed 5 --sizes 24 --threads 7 "
        "--out " + t.file("bench2.csv"));
    REQUIRE(again.exit_code == 0);
    // identical modulo the wall-clock runtime column
    auto strip_runtime = [](const std::string& path) {
      std::ifstream in(path);
      std::ostringstream kept;
      std::string line;
      while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string tok;
        int col = 0;
        while (std::getline(ss, tok, ',')) {
          if (col != 6) kept << tok << ',';
          ++col;
        }
        kept << '\n';
      }
      return kept.str();
    };
    CHECK(strip_runtime(t.file("bench.csv")) == strip_runtime(t.file("bench2.csv")));
  }
}

TEST_CASE("error contract: missing input produces JSON on stderr and exit 1") {
  CliFixture t;
  RunResult r = t.run("fit --data " + t.file("nope.f64") + " --model exponential");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("\"error\"") != std::string::npos);
}

TEST_CASE("non-convergence exits 2 but still writes the result") {
  CliFixture t;
  REQUIRE(t.run("simulate --model exponential --params '{\"sigma\":1.0,\"rho\":3.0}' "
                "--dims 16,16 --seed 8 --out " + t.file("f.f64")).exit_code == 0);
  RunResult r = t.run(
      "fit --data " + t.file("f.f64") +
      " --model exponential --params "
      "'{\"sigma\":{\"value\":1.0,\"fixed\":true},\"rho\":{\"value\":2.0}}' "
      "--max-iters 0 --restarts 0 --no-se --out " + t.file("nc.json"));
  CHECK(r.exit_code == 2);
  CHECK(read_json_file(t.file("nc.json"))["converged"] == false);
}
