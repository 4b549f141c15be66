// gsplit: command-line front end.
//
//   gsplit <pilot|run|diagnose|compare-smc|lasso> --seed N [options]
//
// Options can also come from a config file (--config, TOML or INI) whose
// keys are the long option names. Precedence: command line, then the
// GSPLIT_OUTPUT_DIR environment variable (output_dir only), then the config
// file, then built-in defaults.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gsplit/app.hpp"

namespace {

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << gsplit::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using gsplit::RunConfig;
  CLI::App app{"Generalized splitting sampler for rare-event conditioning, with convergence bounds"};
  app.set_config("--config", "", "Config file (TOML or INI); keys are the long option names");
  app.fallthrough();
  app.require_subcommand(1);

  RunConfig c;
  std::uint64_t seed = 0;
  double gamma_final = 0.0;
  bool pilot = false;

  auto* seed_opt = app.add_option("--seed", seed, "Root seed (required)");
  app.add_option("--output_dir,--output-dir,-o", c.output_dir, "Output directory")->envname("GSPLIT_OUTPUT_DIR");
  app.add_option("--workers", c.workers, "Parallel workers (0 = all cores)");

  auto* model_opt = app.add_option("--model", c.model, "toy_normal | lasso");
  app.add_option("--dimension", c.dimension, "Toy-normal dimension");
  app.add_option("--toy_kernel,--toy-kernel", c.toy_kernel, "exact | hit_and_run");
  app.add_option("--data_path,--data-path", c.data_path, "Diabetes CSV");
  auto* gamma_opt = app.add_option("--gamma", c.gamma, "Lasso constraint |beta|_1 <= gamma");
  app.add_option("--preprocessing", c.preprocessing, "unit_norm | unit_variance | none");

  auto* levels_opt = app.add_option("--levels", c.levels, "Level thresholds (raw, not canonicalized)")->delimiter(',');
  auto* split_opt = app.add_option("--split_factor,--split-factor,-s", c.split_factor, "Splitting factor s");
  auto* direction_opt = app.add_option("--direction", c.direction, "at_least | at_most");
  auto* final_opt = app.add_option("--gamma_final,--gamma-final", gamma_final, "Final level for a pilot run");
  app.add_flag("--pilot", pilot, "Choose levels by a pilot run (ignores --levels)");
  app.add_option("--pilot_population,--pilot-population", c.pilot_population, "Pilot population size");
  app.add_option("--target_rho,--target-rho", c.target_rho, "Pilot target passage probability (0 = 1/s)");
  app.add_option("--max_levels,--max-levels", c.max_levels, "Pilot level limit");

  app.add_option("--strategy", c.strategy, "fixed_n | exceed_t");
  auto* n_opt = app.add_option("--n", c.n, "Number of non-empty trials (fixed_n)");
  app.add_option("--t", c.t, "State count to exceed (exceed_t)");
  app.add_option("--memory_cap,--memory-cap", c.memory_cap, "Per-trial state cap");
  app.add_option("--retry_cap,--retry-cap", c.retry_cap, "Empty-trial retry cap");

  app.add_option("--set_class,--set-class", c.set_class, "one_sided | rectangles | custom");
  app.add_option("--vc", c.vc, "VC dimension for set_class custom");
  app.add_option("--ledger_path,--ledger-path,--ledger", c.ledger_path, "Ledger JSON for diagnose");
  app.add_option("--grid", c.grid, "n grid for diagnose")->delimiter(',');

  app.add_option("--budget", c.budget, "Per-replication effort budget for compare-smc");
  app.add_option("--replications", c.replications, "Replications per method for compare-smc");
  app.add_option("--moves_per_level,--moves-per-level", c.moves_per_level, "SMC kernel moves per level");

  auto* pilot_cmd = app.add_subcommand("pilot", "Choose a level schedule by a pilot run");
  auto* run_cmd = app.add_subcommand("run", "Run the sampler and write ledger, estimates and summaries");
  auto* diagnose_cmd = app.add_subcommand("diagnose", "Bound curves from a ledger");
  auto* compare_cmd = app.add_subcommand("compare-smc", "Budget-matched comparison with fixed-effort SMC");
  auto* lasso_cmd = app.add_subcommand("lasso", "run with the Bayesian Lasso defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (seed_opt->count() > 0) c.seed = seed;
    if (final_opt->count() > 0) c.gamma_final = gamma_final;
    if (lasso_cmd->parsed()) {
      const RunConfig d = gsplit::lasso_defaults();
      if (model_opt->count() == 0) c.model = d.model;
      if (gamma_opt->count() == 0) c.gamma = d.gamma;
      if (levels_opt->count() == 0) c.levels = d.levels;
      if (split_opt->count() == 0) c.split_factor = d.split_factor;
      if (direction_opt->count() == 0) c.direction = d.direction;
      if (n_opt->count() == 0) c.n = d.n;
    }
    if (pilot) c.levels.clear();
    gsplit::validate(c, !diagnose_cmd->parsed());
  } catch (const gsplit::Error& e) {
    return fail(e.kind(), e.what(), 1);
  }

  try {
    gsplit::json summary;
    if (pilot_cmd->parsed()) {
      const auto rep = gsplit::cmd_pilot(c);
      summary = gsplit::pilot_to_json(rep);
    } else if (run_cmd->parsed() || lasso_cmd->parsed()) {
      const auto out = gsplit::cmd_run(c);
      summary = {{"estimate", gsplit::estimate_to_json(out.estimate)},
                 {"trial_count", out.trial_count},
                 {"total_states", out.total_states}};
    } else if (diagnose_cmd->parsed()) {
      const auto rows = gsplit::cmd_diagnose(c);
      summary = {{"rows", rows.size()}};
    } else if (compare_cmd->parsed()) {
      const auto cmp = gsplit::cmd_compare_smc(c);
      summary = {{"gs", gsplit::replicated_to_json(cmp.gs)["pooled"]},
                 {"smc", gsplit::replicated_to_json(cmp.smc)["pooled"]}};
    }
    summary["output_dir"] = c.output_dir;
    std::cout << summary.dump(2) << '\n';
  } catch (const gsplit::InvalidArgument& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const gsplit::Error& e) {
    return fail(e.kind(), e.what(), 2);
  } catch (const std::exception& e) {
    return fail("runtime_error", e.what(), 2);
  }
  return 0;
}
