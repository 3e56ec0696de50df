#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "ihpe/cli.hpp"

using namespace ihpe;
namespace fs = std::filesystem;

namespace {

struct Proc {
  int code = -1;
  std::string out;
};

Proc sh(const std::string& args) {
  const std::string cmd = std::string(IHPE_CLI_PATH) + " " + args + " 2>&1";
  Proc p;
  FILE* f = popen(cmd.c_str(), "r");
  if (!f) return p;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0) p.out.append(buf.data(), n);
  const int st = pclose(f);
  p.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return p;
}

std::string fixture(const char* name) { return std::string(IHPE_SOURCE_DIR) + "/configs/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("ihpe_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

}  // namespace

TEST(CliParams, Table) {
  const Proc p = sh("params --sigma 0,0.99 --beta 0.3333333333333333");
  ASSERT_EQ(p.code, 0) << p.out;
  EXPECT_NE(p.out.find("beta_prime"), std::string::npos);
  // tau(0, 1/3) = 1 and tau(0.99, 1/3) = 1/1.99
  EXPECT_NE(p.out.find("0.50251256281407"), std::string::npos);
  std::ostringstream os;
  cli::ParamsArgs a;
  a.sigma = {0.0};
  a.beta = {1.0 / 3.0};
  EXPECT_EQ(cli::cmd_params(a, os), 0);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  std::istringstream cells(row);
  double s, b, bp, tau;
  cells >> s >> b >> bp >> tau;
  EXPECT_EQ(tau, 1.0);
}

TEST(CliParams, CurveRowsInUnitInterval) {
  const Proc p = sh("params --curve --points 50");
  ASSERT_EQ(p.code, 0);
  std::istringstream is(p.out);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "sigma,beta,beta_prime,tau");
  int rows = 0;
  while (std::getline(is, line)) {
    const double tau = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_GT(tau, 0.0);
    EXPECT_LE(tau, 1.0);
    ++rows;
  }
  EXPECT_EQ(rows, 5 * 50);
}

TEST(CliParams, RangeErrors) {
  EXPECT_EQ(sh("params --sigma 1.0 --beta 0.3").code, cli::kParameter);
  EXPECT_EQ(sh("params --sigma 0.1 --beta 0").code, cli::kParameter);
  EXPECT_EQ(sh("params --bogus").code, cli::kUsage);
  EXPECT_EQ(sh("").code, cli::kUsage);
}

TEST(CliSolve, BundledFixtureSucceeds) {
  TempDir t;
  const Proc p = sh("solve --config " + fixture("affine_ppm.json") + " --out " + t.str());
  ASSERT_EQ(p.code, 0) << p.out;
  EXPECT_NE(p.out.find("pointwise_solution"), std::string::npos);
  for (const char* f : {"trace.jsonl", "trace.csv", "summary.json", "bounds.json"}) {
    EXPECT_TRUE(fs::exists(t.path() / f)) << f;
  }
  const auto summary = nlohmann::json::parse(slurp(t.path() / "summary.json"));
  EXPECT_EQ(summary["verdict"], "pointwise_solution");
  EXPECT_EQ(summary["dimension"], 50);
  EXPECT_TRUE(summary["bounds_ok"].get<bool>());
  EXPECT_LE(summary["final"]["norm_v"].get<double>(), 1e-8);
  EXPECT_LE(summary["bound_utilization"]["v"].get<double>(), 1.0);
}

TEST(CliSolve, EveryFixtureRoundTripsThroughCertify) {
  for (const char* f : {"affine_ppm.json", "bilinear_tseng.json", "lasso_fb.json"}) {
    TempDir t;
    const Proc s = sh("solve --config " + fixture(f) + " --out " + t.str());
    ASSERT_EQ(s.code, 0) << f << "\n" << s.out;
    const Proc c = sh("certify " + (t.path() / "trace.jsonl").string());
    EXPECT_EQ(c.code, 0) << f << "\n" << c.out;
    EXPECT_NE(c.out.find("PASS"), std::string::npos);
    EXPECT_EQ(c.out.find("fail"), std::string::npos) << c.out;
    const Proc c2 = sh("certify " + (t.path() / "trace.jsonl").string() + " --config " + fixture(f));
    EXPECT_EQ(c2.code, 0) << c2.out;
  }
}

TEST(CliSolve, Deterministic) {
  TempDir a, b;
  ASSERT_EQ(sh("solve --config " + fixture("bilinear_tseng.json") + " --out " + a.str()).code, 0);
  ASSERT_EQ(sh("solve --config " + fixture("bilinear_tseng.json") + " --out " + b.str()).code, 0);
  EXPECT_EQ(slurp(a.path() / "trace.jsonl"), slurp(b.path() / "trace.jsonl"));
  EXPECT_EQ(slurp(a.path() / "trace.csv"), slurp(b.path() / "trace.csv"));
}

TEST(CliSolve, SeedOverrideChangesTheProblem) {
  TempDir a, b;
  ASSERT_EQ(sh("solve --config " + fixture("lasso_fb.json") + " --out " + a.str() + " --seed 5").code, 0);
  ASSERT_EQ(sh("solve --config " + fixture("lasso_fb.json") + " --out " + b.str() + " --seed 6").code, 0);
  EXPECT_NE(slurp(a.path() / "trace.jsonl"), slurp(b.path() / "trace.jsonl"));
}

TEST(CliSolve, AlphaNotBelowBetaIsAParameterError) {
  TempDir t;
  const auto cfg = t.write("c.json", R"({"schema_version":1,
    "problem":{"kind":"affine_inclusion","dimension":5,"seed":1},
    "instance":{"kind":"ppm","lambda":{"rule":"constant","value":1}},
    "params":{"alpha":0.5,"sigma":0.0,"beta":0.4}})");
  const Proc p = sh("solve --config " + cfg.string() + " --out " + t.str());
  EXPECT_EQ(p.code, cli::kParameter);
  EXPECT_TRUE(p.out.find("q(alpha) <= 0") != std::string::npos ||
              p.out.find("alpha >= beta") != std::string::npos)
      << p.out;
}

TEST(CliSolve, TsengStepsizeAboveCap) {
  TempDir t;
  const auto cfg = t.write("c.json", R"({"schema_version":1,
    "problem":{"kind":"bilinear_saddle","dimension":6,"seed":1},
    "instance":{"kind":"tseng_fbf","lambda":{"rule":"constant","value":100}},
    "params":{"alpha":0.1,"sigma":0.5,"beta":0.3}})");
  const Proc p = sh("solve --config " + cfg.string() + " --out " + t.str());
  EXPECT_EQ(p.code, cli::kParameter);
  EXPECT_NE(p.out.find("sigma/L"), std::string::npos) << p.out;
}

TEST(CliSolve, ParseAndUsageErrors) {
  TempDir t;
  const auto bad = t.write("bad.json", "{\n\"schema_version\": 1,\n oops\n}");
  const Proc p = sh("solve --config " + bad.string());
  EXPECT_EQ(p.code, cli::kParse);
  EXPECT_NE(p.out.find("line 3"), std::string::npos) << p.out;
  EXPECT_EQ(sh("solve --config " + (t.path() / "nope.json").string()).code, cli::kUsage);
  EXPECT_EQ(sh("solve").code, cli::kUsage);
}

TEST(CliSolve, IterationCapExitCode) {
  TempDir t;
  const auto cfg = t.write("c.json", R"({"schema_version":1,
    "problem":{"kind":"affine_inclusion","dimension":5,"seed":1},
    "instance":{"kind":"ppm","lambda":{"rule":"constant","value":1e-3}},
    "params":{"alpha":0.0,"sigma":0.0},
    "stopping":{"max_iter":3}})");
  EXPECT_EQ(sh("solve --config " + cfg.string() + " --out " + t.str()).code, cli::kIterationCap);
}

TEST(CliBench, TwoRowsDeterministic) {
  TempDir a, b;
  const Proc p = sh("bench --config " + fixture("sweep_alpha.json") + " --out " + a.str());
  ASSERT_EQ(p.code, 0) << p.out;
  ASSERT_EQ(sh("bench --config " + fixture("sweep_alpha.json") + " --out " + b.str() + " --jobs 1").code, 0);
  const std::string csv = slurp(a.path() / "bench.csv");
  EXPECT_EQ(csv, slurp(b.path() / "bench.csv"));
  std::istringstream is(csv);
  std::string line;
  std::vector<std::string> rows;
  std::getline(is, line);
  while (std::getline(is, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].substr(0, 2), "0,");
  EXPECT_EQ(rows[1].substr(0, 4), "0.3,");
  for (const auto& r : rows) EXPECT_NE(r.find(",ok,pointwise_solution,"), std::string::npos) << r;
}

TEST(CliBench, EmptyGridIsAUsageError) {
  TempDir t;
  const auto cfg = t.write("c.json", R"({"schema_version":1,
    "problem":{"kind":"affine_inclusion","dimension":5,"seed":1},
    "instance":{"kind":"ppm","lambda":{"rule":"constant","value":1}},
    "params":{"alpha":0.0,"sigma":0.0},
    "sweep":{"alpha":[]}})");
  EXPECT_EQ(sh("bench --config " + cfg.string() + " --out " + t.str()).code, cli::kUsage);
  EXPECT_EQ(sh("bench --config " + fixture("affine_ppm.json") + " --out " + t.str()).code, cli::kUsage);
}

TEST(CliBench, CellFailuresAreRecorded) {
  ExperimentConfig c = load_config(fixture("sweep_alpha.json"));
  c.sweep->alpha = {0.0, 0.9};  // 0.9 violates q(alpha) > 0
  const auto rows = cli::run_bench(c, std::nullopt, 2);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, "ok");
  EXPECT_EQ(rows[1].status, "error");
  EXPECT_NE(rows[1].message.find("q(alpha)"), std::string::npos);
}

TEST(CliCertify, CorruptedEpsFailsAtThatIteration) {
  TempDir t;
  ASSERT_EQ(sh("solve --config " + fixture("lasso_fb.json") + " --out " + t.str()).code, 0);
  std::ifstream in(t.path() / "trace.jsonl");
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    if (j.value("k", 0L) == 5) j["eps"] = j["eps"].get<double>() * 10.0 + 1.0;
    out << j.dump() << '\n';
  }
  const auto bad = t.write("bad.jsonl", out.str());
  const Proc p = sh("certify " + bad.string());
  EXPECT_EQ(p.code, cli::kTheorem);
  EXPECT_NE(p.out.find("relative-error criterion fails at k = 5"), std::string::npos) << p.out;
  EXPECT_NE(p.out.find("FAIL"), std::string::npos);
}

TEST(CliCertify, EmptyTraceIsVacuous) {
  TempDir t;
  const auto empty = t.write("empty.jsonl", "");
  const Proc p = sh("certify " + empty.string());
  EXPECT_EQ(p.code, 0) << p.out;
  EXPECT_NE(p.out.find("warning: empty trace"), std::string::npos);
}

TEST(CliCertify, MalformedTraceReportsLine) {
  TempDir t;
  ASSERT_EQ(sh("solve --config " + fixture("affine_ppm.json") + " --out " + t.str()).code, 0);
  std::string text = slurp(t.path() / "trace.jsonl");
  const std::size_t third = text.find('\n', text.find('\n', text.find('\n') + 1) + 1);
  text.insert(third + 1, "{\"k\": \n");
  const auto bad = t.write("bad.jsonl", text);
  const Proc p = sh("certify " + bad.string());
  EXPECT_EQ(p.code, cli::kParse);
  EXPECT_NE(p.out.find("line 4"), std::string::npos) << p.out;
}

TEST(CliCertify, HeaderlessTraceNeedsConfig) {
  TempDir t;
  ASSERT_EQ(sh("solve --config " + fixture("affine_ppm.json") + " --out " + t.str()).code, 0);
  std::string text = slurp(t.path() / "trace.jsonl");
  text.erase(0, text.find('\n') + 1);
  const auto bare = t.write("bare.jsonl", text);
  EXPECT_EQ(sh("certify " + bare.string()).code, cli::kUsage);
  EXPECT_EQ(sh("certify " + bare.string() + " --config " + fixture("affine_ppm.json")).code, 0);
}

TEST(CliExitCodes, Mapping) {
  EXPECT_EQ(cli::exit_code_for(ParseError(1, "x")), cli::kParse);
  EXPECT_EQ(cli::exit_code_for(ParameterError("c", "x")), cli::kParameter);
  EXPECT_EQ(cli::exit_code_for(CertificationError(1, 2.0, "x")), cli::kCertification);
  EXPECT_EQ(cli::exit_code_for(TheoremViolation(1, "b", "x")), cli::kTheorem);
  EXPECT_EQ(cli::exit_code_for(NumericalError(1, "x")), cli::kNumerical);
  EXPECT_EQ(cli::exit_code_for(OracleError("x")), cli::kOracle);
  EXPECT_EQ(cli::exit_code_for(UsageError("x")), cli::kUsage);
  EXPECT_EQ(cli::exit_code_for(std::runtime_error("x")), cli::kFailure);
}
