#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gsplit/gsplit.hpp"

using namespace gsplit;
namespace fs = std::filesystem;

namespace {

const std::string kCli = GSPLIT_CLI_PATH;
const std::string kData = std::string(GSPLIT_SOURCE_DIR) + "/data/diabetes.csv";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gsplit_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args, const fs::path& err_file = {}) {
  std::string cmd = kCli + " " + args + " > /dev/null";
  cmd += err_file.empty() ? " 2>/dev/null" : " 2>" + err_file.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Data rows of a CSV (schema line and header skipped), split on commas.
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

void write_synthetic_ledger(const fs::path& p, const std::vector<std::uint64_t>& sizes) {
  json j = {{"schema", kLedgerSchema},
            {"schedule", {{"levels", {1.0, 2.0}}, {"split_factor", 10}, {"direction", "at_least"}}},
            {"stopping_rule", {{"kind", "fixed_n"}, {"value", sizes.size()}}},
            {"dimension", 1},
            {"sizes", sizes},
            {"discarded_empty_trials", std::vector<std::uint64_t>(sizes.size(), 0)},
            {"kernel_steps", std::vector<std::uint64_t>(sizes.size(), 10)},
            {"discarded_kernel_steps", std::vector<std::uint64_t>(sizes.size(), 0)}};
  write_json(p, j);
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
  RandomStream rng = SeedSequence(1).stream(StreamDomain::Validation, 0);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.normal() * 20);
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Ledger, JsonRoundTripKeepsTrialRecord) {
  const ToyNormalModel model(1);
  const LevelSchedule schedule({1.0, 2.0}, 5);
  const RunLedger ledger = collect_fixed_n(model, schedule, 50, SeedSequence(2));
  const LedgerRecord rec = ledger_from_json(json::parse(ledger_to_json(ledger).dump()));
  EXPECT_TRUE(rec.schedule == schedule);
  EXPECT_EQ(rec.rule, ledger.stopping_rule());
  EXPECT_EQ(rec.dimension, 1u);
  ASSERT_EQ(rec.sizes.size(), 50u);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(rec.sizes[i], ledger.trials()[i].size());
    EXPECT_EQ(rec.discarded_empty_trials[i], ledger.trials()[i].discarded_empty_trials);
  }
  json bad = ledger_to_json(ledger);
  bad["schema"] = "gsplit.ledger/0";
  EXPECT_THROW(ledger_from_json(bad), ParseError);
  bad = ledger_to_json(ledger);
  bad["sizes"][3] = 0;
  EXPECT_THROW(ledger_from_json(bad), ParseError);
}

TEST(Cli, RunOutputsAreByteIdenticalAcrossWorkerCounts) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string common = "run --seed 11 --dimension 2 --toy_kernel hit_and_run --levels 1.28,2.33 --n 300 ";
  ASSERT_EQ(run_cli(common + "--workers 1 -o " + a.string()), 0);
  ASSERT_EQ(run_cli(common + "--workers 3 -o " + b.string()), 0);
  for (const char* f : {"ledger.json", "states.csv", "estimate.json", "marginals.csv", "bounds.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  EXPECT_EQ(slurp(a / "bounds.csv").rfind("# schema: gsplit.bounds/1\nn_or_t,criterion,constant,bound,vacuous_flag\n", 0), 0u);
  EXPECT_EQ(csv_rows(a / "bounds.csv").size(), 7u);
}

TEST(Cli, ExitCodesAndErrorJson) {
  const fs::path dir = scratch("exit");
  EXPECT_EQ(run_cli("run --levels 1 -o " + dir.string()), 1);  // no seed
  EXPECT_EQ(run_cli("run --seed 1 --levels 1 --no-such-flag"), 1);
  EXPECT_EQ(run_cli("lasso --seed 1 --data_path /nonexistent.csv -o " + dir.string()), 1);
  EXPECT_EQ(run_cli("compare-smc --seed 1 --levels 1 --budget 0 -o " + dir.string()), 1);
  const fs::path err = dir / "err.txt";
  EXPECT_EQ(run_cli("run --seed 1 --levels 9 --retry_cap 5 -o " + dir.string(), err), 2);
  const json j = json::parse(slurp(err));
  EXPECT_EQ(j.at("error"), "retry_budget");
  EXPECT_TRUE(j.contains("message"));
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, ConfigFileAndPrecedence) {
  const fs::path dir = scratch("config");
  {
    std::ofstream cfg(dir / "run.toml");
    cfg << "seed = 5\nlevels = [1.0, 2.0]\nn = 30\noutput_dir = \"" << (dir / "from_file").string() << "\"\n";
  }
  ASSERT_EQ(run_cli("run --config " + (dir / "run.toml").string() + " --n 40"), 0);
  const json est = json::parse(slurp(dir / "from_file" / "estimate.json"));
  EXPECT_EQ(est.at("trial_count"), 40);
  // A value from the file beats the environment variable.
  const std::string env_run = "GSPLIT_OUTPUT_DIR=" + (dir / "from_env").string() + " " + kCli + " run --config ";
  ASSERT_EQ(std::system((env_run + (dir / "run.toml").string() + " > /dev/null").c_str()), 0);
  EXPECT_FALSE(fs::exists(dir / "from_env"));
  {
    std::ofstream cfg(dir / "no_dir.toml");
    cfg << "seed = 5\nlevels = [1.0, 2.0]\nn = 30\n";
  }
  ASSERT_EQ(std::system((env_run + (dir / "no_dir.toml").string() + " > /dev/null").c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "from_env" / "estimate.json"));
}

TEST(Cli, ExceedTRunRecordsTheCrossing) {
  const fs::path dir = scratch("exceed");
  ASSERT_EQ(run_cli("run --seed 3 --levels 1.28,2.33 --strategy exceed_t --t 10000 -o " + dir.string()), 0);
  const LedgerRecord rec = read_ledger(dir / "ledger.json");
  std::uint64_t total = 0;
  for (auto m : rec.sizes) total += m;
  EXPECT_GT(total, 10000u);
  EXPECT_LE(total - rec.sizes.back(), 10000u);
  EXPECT_EQ(rec.rule.kind, StoppingKind::ExceedT);
}

TEST(Cli, DiagnoseTwoPointLedgerMatchesExactConstants) {
  const fs::path dir = scratch("diag");
  std::vector<std::uint64_t> sizes;
  for (int i = 0; i < 50; ++i) {
    sizes.push_back(1);
    sizes.push_back(2);
  }
  write_synthetic_ledger(dir / "ledger.json", sizes);
  ASSERT_EQ(run_cli("diagnose --seed 1 --ledger " + (dir / "ledger.json").string() + " --grid 100 -o " +
                    (dir / "out").string()),
            0);
  const std::vector<std::pair<double, double>> pmf{{1.0, 0.5}, {2.0, 0.5}};
  const MomentSummary exact = exact_moments(pmf);
  const auto rows = csv_rows(dir / "out" / "bounds.csv");
  ASSERT_EQ(rows.size(), 7u);
  auto constant = [&](const std::string& name) {
    for (const auto& r : rows) {
      if (r[1] == name) return std::stod(r[2]);
    }
    return std::nan("");
  };
  EXPECT_NEAR(constant("tv_fixed_n"), bound_tv_fixed_n(exact, 100).constant, 1e-12);
  EXPECT_NEAR(constant("mae_fixed_n"), bound_mae_fixed_n(exact, 100).constant, 1e-12);
  EXPECT_NEAR(constant("tv_until_t"), bound_tv_until_t(exact, 150).constant, 1e-12);
  EXPECT_NEAR(constant("tv_asymptotic"), 0.691358, 1e-6);
}

TEST(Cli, DiagnoseConstantSizesGivesZeroC1) {
  const fs::path dir = scratch("diag_const");
  write_synthetic_ledger(dir / "ledger.json", std::vector<std::uint64_t>(40, 3));
  ASSERT_EQ(run_cli("diagnose --seed 1 --ledger " + (dir / "ledger.json").string() + " -o " + (dir / "out").string()), 0);
  int seen = 0;
  for (const auto& r : csv_rows(dir / "out" / "bounds.csv")) {
    if (r[1] == "tv_fixed_n") {
      EXPECT_EQ(std::stod(r[2]), 0.0);
      ++seen;
    }
  }
  EXPECT_EQ(seen, 6);
}

TEST(Cli, LassoSmokeWithPilotLevels) {
  const fs::path dir = scratch("lasso_smoke");
  ASSERT_EQ(run_cli("lasso --seed 4 --pilot -s 10 --n 50 --pilot_population 2000 --data_path " + kData + " -o " +
                    dir.string()),
            0);
  for (const char* f : {"pilot.json", "pilot.csv", "ledger.json", "states.csv", "estimate.json", "marginals.csv",
                        "bounds.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto marginals = csv_rows(dir / "marginals.csv");
  ASSERT_EQ(marginals.size(), 10u);
  EXPECT_EQ(marginals[0][0], "beta_age");
  EXPECT_FALSE(marginals[0][6].empty());
  const json pilot = json::parse(slurp(dir / "pilot.json"));
  EXPECT_EQ(pilot.at("schedule").at("levels").back(), 1200.0);
}

TEST(Cli, PilotSubcommandOnToy) {
  const fs::path dir = scratch("pilot");
  ASSERT_EQ(run_cli("pilot --seed 2 --gamma_final 3.0902323061678132 -o " + dir.string()), 0);
  const auto rows = csv_rows(dir / "pilot.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(std::stod(rows[0][1]), 1.2816, 0.05);
  EXPECT_NEAR(std::stod(rows[1][1]), 2.3263, 0.05);
}
