#pragma once

// Experiment pipeline behind the command-line tool: a flat run
// configuration, model dispatch, and one function per subcommand that
// writes its artifacts into the output directory.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gsplit/diagnostics.hpp"
#include "gsplit/errors.hpp"
#include "gsplit/estimators.hpp"
#include "gsplit/io.hpp"
#include "gsplit/lasso.hpp"
#include "gsplit/model.hpp"
#include "gsplit/pilot.hpp"
#include "gsplit/smc.hpp"
#include "gsplit/splitting.hpp"
#include "gsplit/toy_normal.hpp"

namespace gsplit {

struct RunConfig {
  // model
  std::string model = "toy_normal";  // toy_normal | lasso
  std::size_t dimension = 1;
  std::string toy_kernel = "exact";
  std::string data_path = "data/diabetes.csv";
  double gamma = 1200.0;
  std::string preprocessing = "unit_norm";

  // schedule: explicit levels, or a pilot run towards gamma_final when empty
  std::vector<double> levels;
  int split_factor = 10;
  std::string direction;  // default: at_least for toy_normal, at_most for lasso
  std::optional<double> gamma_final;
  std::size_t pilot_population = 10'000;
  double target_rho = 0.0;
  std::size_t max_levels = 50;

  // stopping rule
  std::string strategy = "fixed_n";  // fixed_n | exceed_t
  std::uint64_t n = 1000;
  std::uint64_t t = 10'000;

  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";

  // set class for the expected-TV bounds
  std::string set_class = "one_sided";  // one_sided | rectangles | custom
  std::size_t vc = 0;

  // diagnose
  std::string ledger_path;
  std::vector<double> grid;

  // compare-smc
  std::uint64_t budget = 100'000;
  std::size_t replications = 30;
  std::size_t moves_per_level = 1;

  unsigned workers = 0;
  std::uint64_t memory_cap = 10'000'000;
  std::uint64_t retry_cap = 1'000'000;
};

/// Defaults of the `lasso` subcommand: gamma = 1200 with the four-level
/// schedule, s = 100 and n = 10^4.
inline RunConfig lasso_defaults() {
  RunConfig c;
  c.model = "lasso";
  c.gamma = 1200.0;
  c.levels = default_lasso_schedule().levels();
  c.split_factor = 100;
  c.direction = "at_most";
  c.n = 10'000;
  return c;
}

inline Direction config_direction(const RunConfig& c) {
  if (!c.direction.empty()) return parse_direction(c.direction);
  return c.model == "lasso" ? Direction::AtMost : Direction::AtLeast;
}

inline SeedSequence config_seeds(const RunConfig& c) {
  if (!c.seed) throw InvalidArgument("a seed is required (--seed)");
  return SeedSequence(*c.seed);
}

inline SplittingOptions config_options(const RunConfig& c) {
  return {c.memory_cap, c.retry_cap, resolve_workers(c.workers)};
}

/// Checks that do not need to run anything. Throws InvalidArgument.
inline void validate(const RunConfig& c, bool needs_model = true) {
  if (!c.seed) throw InvalidArgument("a seed is required (--seed)");
  if (c.output_dir.empty()) throw InvalidArgument("output_dir must not be empty");
  if (needs_model) {
    if (c.model == "custom") throw UnsupportedModel("custom models are available through the library API only");
    if (c.model != "toy_normal" && c.model != "lasso") throw InvalidArgument("unknown model '" + c.model + "'");
    if (c.model == "toy_normal") {
      if (c.dimension == 0) throw InvalidArgument("dimension must be >= 1");
      parse_toy_kernel(c.toy_kernel);
    } else {
      if (!std::filesystem::exists(c.data_path)) throw InvalidArgument("data file '" + c.data_path + "' does not exist");
      if (!(c.gamma > 0.0)) throw InvalidArgument("gamma must be positive");
      parse_preprocessing(c.preprocessing);
    }
    if (c.split_factor < 2) throw InvalidArgument("split_factor must be >= 2");
    config_direction(c);
    if (c.levels.empty() && !c.gamma_final && c.model != "lasso") {
      throw InvalidArgument("give either levels or gamma_final (pilot request)");
    }
    if (c.strategy != "fixed_n" && c.strategy != "exceed_t") {
      throw InvalidArgument("unknown strategy '" + c.strategy + "'");
    }
    if (c.strategy == "fixed_n" && c.n == 0) throw InvalidArgument("n must be >= 1");
    if (c.strategy == "exceed_t" && c.t == 0) throw InvalidArgument("t must be >= 1");
  }
  if (c.set_class != "one_sided" && c.set_class != "rectangles" && c.set_class != "custom") {
    throw InvalidArgument("unknown set_class '" + c.set_class + "'");
  }
  if (c.set_class == "custom" && c.vc == 0) throw InvalidArgument("set_class custom needs vc >= 1");
  if (c.memory_cap == 0 || c.retry_cap == 0) throw InvalidArgument("memory_cap and retry_cap must be positive");
}

inline SetClass config_set_class(const RunConfig& c, std::size_t dimension) {
  if (c.set_class == "rectangles") return SetClass::rectangles(dimension);
  if (c.set_class == "custom") return SetClass::custom(c.vc);
  return SetClass::one_sided_intervals(dimension);
}

/// Calls `fn(model, coordinate_names, reference)` with the configured model.
/// `reference` holds per-coordinate reference values for marginal summaries.
template <class Fn>
decltype(auto) with_model(const RunConfig& c, Fn&& fn) {
  if (c.model == "lasso") {
    RegressionData data = load_diabetes_csv(c.data_path, parse_preprocessing(c.preprocessing));
    const LassoPosterior model(data, c.gamma);
    std::vector<std::string> names;
    for (const auto& p : data.predictor_names) names.push_back("beta_" + p);
    names.push_back("sigma");
    const Eigen::VectorXd& ols = model.least_squares_solution();
    std::vector<double> reference(ols.data(), ols.data() + ols.size());
    return fn(model, names, reference);
  }
  if (c.model == "toy_normal") {
    const ToyNormalModel model(c.dimension, parse_toy_kernel(c.toy_kernel));
    std::vector<std::string> names;
    for (std::size_t j = 0; j < c.dimension; ++j) names.push_back("x" + std::to_string(j));
    return fn(model, names, std::vector<double>{});
  }
  throw UnsupportedModel("model '" + c.model + "' is not available from the command line");
}

inline std::filesystem::path prepare_output_dir(const RunConfig& c) {
  std::filesystem::path dir(c.output_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <SplittingModel Model>
PilotReport run_pilot(const Model& model, const RunConfig& c) {
  const double final_level = c.gamma_final ? *c.gamma_final : c.gamma;
  PilotConfig pc;
  pc.target_rho = c.target_rho;
  pc.population = c.pilot_population;
  pc.max_levels = c.max_levels;
  return pilot_levels(model, c.split_factor, final_level, config_direction(c), pc, config_seeds(c));
}

template <SplittingModel Model>
LevelSchedule resolve_schedule(const Model& model, const RunConfig& c, std::optional<PilotReport>* pilot = nullptr) {
  if (!c.levels.empty()) return LevelSchedule(c.levels, c.split_factor, config_direction(c));
  PilotReport rep = run_pilot(model, c);
  LevelSchedule s = rep.schedule;
  if (pilot) *pilot = std::move(rep);
  return s;
}

inline void write_pilot(const std::filesystem::path& dir, const PilotReport& rep) {
  write_json(dir / "pilot.json", pilot_to_json(rep));
  CsvWriter csv(dir / "pilot.csv", kPilotSchema, {"level", "threshold", "rho_hat"});
  for (std::size_t l = 0; l < rep.schedule.depth(); ++l) {
    csv.row({std::to_string(l + 1), format_number(rep.schedule.level(l)), format_number(rep.rho_hat[l])});
  }
}

/// `pilot`: writes pilot.json and pilot.csv.
inline PilotReport cmd_pilot(const RunConfig& c) {
  validate(c);
  return with_model(c, [&](const auto& model, const auto&, const auto&) {
    PilotReport rep = run_pilot(model, c);
    write_pilot(prepare_output_dir(c), rep);
    return rep;
  });
}

struct RunOutcome {
  ProbabilityEstimate estimate;
  MomentSummary moments;
  std::size_t trial_count = 0;
  std::uint64_t total_states = 0;
};

/// `run`: ledger.json, states.csv, estimate.json, marginals.csv, bounds.csv
/// (and pilot.json/pilot.csv when the schedule came from a pilot run).
inline RunOutcome cmd_run(const RunConfig& c) {
  validate(c);
  return with_model(c, [&](const auto& model, const std::vector<std::string>& names,
                           const std::vector<double>& reference) {
    const auto dir = prepare_output_dir(c);
    std::optional<PilotReport> pilot;
    const LevelSchedule schedule = resolve_schedule(model, c, &pilot);
    if (pilot) write_pilot(dir, *pilot);

    const SeedSequence seeds = config_seeds(c);
    const SplittingOptions options = config_options(c);
    const RunLedger ledger = c.strategy == "fixed_n" ? collect_fixed_n(model, schedule, c.n, seeds, options)
                                                     : collect_until_t(model, schedule, c.t, seeds, options);
    RunOutcome out;
    out.estimate = estimate_rare_event_probability(ledger);
    out.trial_count = ledger.trial_count();
    out.total_states = ledger.total_states();

    write_json(dir / "ledger.json", ledger_to_json(ledger));
    write_states_csv(dir / "states.csv", ledger, names);
    const std::size_t coords = reference.empty() ? ledger.dimension() : reference.size();
    write_marginals_csv(dir / "marginals.csv", marginal_summaries(ledger, coords, reference), names);

    json report = {{"schema", kEstimateSchema},
                   {"model", c.model},
                   {"seed", *c.seed},
                   {"schedule", schedule_to_json(schedule)},
                   {"stopping_rule", {{"kind", to_string(ledger.stopping_rule().kind)}, {"value", ledger.stopping_rule().value}}},
                   {"trial_count", ledger.trial_count()},
                   {"total_states", ledger.total_states()},
                   {"total_effort", ledger.total_effort()},
                   {"estimate", estimate_to_json(out.estimate)}};
    if (ledger.trial_count() >= 2) {
      out.moments = estimate_moments(ledger);
      report["moments"] = moments_to_json(out.moments);
      const double n = static_cast<double>(ledger.trial_count());
      const double t = static_cast<double>(ledger.total_states());
      const auto bounds = evaluate_bounds(out.moments, n, t, config_set_class(c, ledger.dimension()),
                                          schedule.split_factor(), schedule.depth());
      write_bounds_csv(dir / "bounds.csv", bound_rows(bounds));
    }
    write_json(dir / "estimate.json", report);
    return out;
  });
}

inline std::vector<double> default_grid() { return {1e1, 1e2, 1e3, 1e4, 1e5, 1e6}; }

/// `diagnose`: bound curves from a ledger's trial sizes, with t = n m.
/// Writes bounds.csv and moments.json.
inline std::vector<BoundRow> cmd_diagnose(const RunConfig& c) {
  validate(c, false);
  if (c.ledger_path.empty()) throw InvalidArgument("diagnose needs a ledger path");
  if (!std::filesystem::exists(c.ledger_path)) throw InvalidArgument("ledger '" + c.ledger_path + "' does not exist");
  const LedgerRecord rec = read_ledger(c.ledger_path);
  const auto sizes = rec.size_values();
  const MomentSummary moments = estimate_moments(sizes);
  const auto grid = c.grid.empty() ? default_grid() : c.grid;
  for (double n : grid) {
    if (!(n > 0.0)) throw InvalidArgument("grid values must be positive");
  }
  const auto rows = bound_curves(moments, grid, config_set_class(c, rec.dimension), rec.schedule.split_factor(),
                                 rec.schedule.depth());
  const auto dir = prepare_output_dir(c);
  write_bounds_csv(dir / "bounds.csv", rows);
  write_json(dir / "moments.json", {{"schema", kEstimateSchema}, {"moments", moments_to_json(moments)}});
  return rows;
}

/// `compare-smc`: GS and SMC at a matched per-run budget, replicated.
/// Writes comparison.csv and comparison.json.
inline Comparison cmd_compare_smc(const RunConfig& c) {
  validate(c);
  if (c.budget == 0) throw InvalidArgument("budget must be positive");
  if (c.replications < 2) throw InvalidArgument("replications must be >= 2");
  if (c.moves_per_level == 0) throw InvalidArgument("moves_per_level must be >= 1");
  return with_model(c, [&](const auto& model, const auto&, const auto&) {
    const auto dir = prepare_output_dir(c);
    std::optional<PilotReport> pilot;
    const LevelSchedule schedule = resolve_schedule(model, c, &pilot);
    if (pilot) write_pilot(dir, *pilot);
    Comparison cmp = compare_gs_smc(model, schedule, c.budget, c.replications, c.moves_per_level, config_seeds(c),
                                    config_options(c));
    write_comparison_csv(dir / "comparison.csv", cmp);
    write_json(dir / "comparison.json", {{"schema", kComparisonSchema},
                                         {"schedule", schedule_to_json(schedule)},
                                         {"budget", c.budget},
                                         {"smc_particle_count", cmp.smc_config.particle_count},
                                         {"smc_moves_per_level", cmp.smc_config.moves_per_level},
                                         {"gs", replicated_to_json(cmp.gs)},
                                         {"smc", replicated_to_json(cmp.smc)}});
    return cmp;
  });
}

}  // namespace gsplit
