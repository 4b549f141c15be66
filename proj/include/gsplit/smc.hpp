#pragma once

// Fixed-effort sequential Monte Carlo for rare-event probabilities, the
// interacting-particle baseline that GS is compared against: N particles
// per level, multinomial resampling of the survivors, then kernel moves.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gsplit/errors.hpp"
#include "gsplit/estimators.hpp"
#include "gsplit/model.hpp"
#include "gsplit/parallel.hpp"
#include "gsplit/random.hpp"
#include "gsplit/splitting.hpp"
#include "gsplit/state.hpp"

namespace gsplit {

struct SmcConfig {
  std::size_t particle_count = 1000;
  std::size_t moves_per_level = 1;
};

struct SmcRun {
  double estimate = 0.0;
  /// No particle reached some level; the estimate is then 0.
  bool extinct = false;
  /// Draws from f plus kernel steps.
  std::uint64_t effort = 0;
  std::vector<double> level_fractions;
};

/// Effort of one SMC run: N draws from f and N * moves kernel steps for each
/// level after the first.
inline std::uint64_t smc_effort(const SmcConfig& config, std::size_t depth) {
  return config.particle_count * (1 + config.moves_per_level * (depth - 1));
}

template <SplittingModel Model>
SmcRun run_smc(const Model& model, const LevelSchedule& schedule, const SmcConfig& config, RandomStream& rng) {
  if (config.particle_count < 2) throw InvalidArgument("run_smc: need at least 2 particles");
  if (config.moves_per_level < 1 && schedule.depth() > 1) {
    throw InvalidArgument("run_smc: need at least one move per level");
  }
  const std::size_t n = config.particle_count;
  const std::size_t dim = model.dimension();
  std::vector<double> particles(n * dim);
  std::vector<double> scores(n);
  auto row = [&](std::vector<double>& v, std::size_t i) { return std::span<double>(v.data() + i * dim, dim); };

  SmcRun run;
  for (std::size_t i = 0; i < n; ++i) {
    model.sample_f(rng, row(particles, i));
    scores[i] = model.importance(row(particles, i));
  }
  run.effort = n;
  run.estimate = 1.0;

  std::vector<std::size_t> survivors;
  std::vector<double> next(n * dim);
  for (std::size_t l = 0; l < schedule.depth(); ++l) {
    if (l > 0) {
      // Resample N particles from the survivors of level l-1, then move them.
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pick = survivors[rng.below(survivors.size())];
        std::copy_n(particles.begin() + pick * dim, dim, next.begin() + i * dim);
      }
      particles.swap(next);
      const LevelConstraint support = schedule.constraint(l - 1);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < config.moves_per_level; ++k) {
          model.kernel_step(support, row(particles, i), rng);
        }
        scores[i] = model.importance(row(particles, i));
      }
      run.effort += n * config.moves_per_level;
    }
    survivors.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (schedule.reaches(scores[i], l)) survivors.push_back(i);
    }
    const double fraction = static_cast<double>(survivors.size()) / static_cast<double>(n);
    run.level_fractions.push_back(fraction);
    run.estimate *= fraction;
    if (survivors.empty()) {
      run.extinct = true;
      run.estimate = 0.0;
      break;
    }
  }
  return run;
}

/// Summary of independent replications of one estimator.
struct ReplicatedEstimate {
  std::string method;
  std::vector<double> estimates;
  double mean_effort = 0.0;
  std::size_t extinctions = 0;
  /// Mean over replications, with standard error sd / sqrt(R).
  ProbabilityEstimate pooled;
  /// sd / mean across replications: relative error of a single run.
  double single_run_relative_error = 0.0;
};

namespace detail {

inline void summarize(ReplicatedEstimate& out, double total_effort) {
  const auto r = static_cast<double>(out.estimates.size());
  out.mean_effort = total_effort / r;
  out.pooled = mean_estimate(out.estimates, 1.0);
  const double sd = out.pooled.standard_error * std::sqrt(r);
  out.single_run_relative_error = out.pooled.value > 0.0 ? sd / out.pooled.value : 0.0;
}

}  // namespace detail

template <SplittingModel Model>
ReplicatedEstimate run_smc_replications(const Model& model, const LevelSchedule& schedule, const SmcConfig& config,
                                        std::size_t replications, const SeedSequence& seeds, unsigned workers = 1) {
  if (replications < 2) throw InvalidArgument("run_smc_replications: need at least 2 replications");
  std::vector<SmcRun> runs(replications);
  parallel_for_index(replications, workers, [&](std::size_t i) {
    RandomStream rng = seeds.stream(StreamDomain::Smc, i);
    runs[i] = run_smc(model, schedule, config, rng);
  });
  ReplicatedEstimate out;
  out.method = "smc";
  double effort = 0.0;
  for (const auto& run : runs) {
    out.estimates.push_back(run.estimate);
    out.extinctions += run.extinct ? 1 : 0;
    effort += static_cast<double>(run.effort);
  }
  detail::summarize(out, effort);
  return out;
}

struct BudgetRun {
  ProbabilityEstimate estimate;
  std::uint64_t effort = 0;
};

/// Unconditioned GS trials until the spent effort reaches `budget`; the
/// trial in progress is completed.
template <SplittingModel Model>
BudgetRun run_gs_budget(const Model& model, const LevelSchedule& schedule, std::uint64_t budget, RandomStream& rng,
                        const SplittingOptions& options = {}) {
  if (budget == 0) throw InvalidArgument("run_gs_budget: budget must be positive");
  std::vector<double> sizes;
  BudgetRun out;
  while (out.effort < budget) {
    const TrialResult trial = run_gs_trial(model, schedule, rng, options);
    out.effort += trial.effort();
    sizes.push_back(static_cast<double>(trial.size()));
  }
  out.estimate = estimate_rare_event_probability(std::span<const double>(sizes), schedule);
  return out;
}

template <SplittingModel Model>
ReplicatedEstimate run_gs_budget_replications(const Model& model, const LevelSchedule& schedule, std::uint64_t budget,
                                              std::size_t replications, const SeedSequence& seeds,
                                              const SplittingOptions& options = {}) {
  if (replications < 2) throw InvalidArgument("run_gs_budget_replications: need at least 2 replications");
  std::vector<BudgetRun> runs(replications);
  SplittingOptions serial = options;
  serial.workers = 1;
  parallel_for_index(replications, options.workers, [&](std::size_t i) {
    RandomStream rng = seeds.stream(StreamDomain::Budget, i);
    runs[i] = run_gs_budget(model, schedule, budget, rng, serial);
  });
  ReplicatedEstimate out;
  out.method = "gs";
  double effort = 0.0;
  for (const auto& run : runs) {
    out.estimates.push_back(run.estimate.value);
    out.extinctions += run.estimate.value == 0.0 ? 1 : 0;
    effort += static_cast<double>(run.effort);
  }
  detail::summarize(out, effort);
  return out;
}

struct Comparison {
  ReplicatedEstimate gs;
  ReplicatedEstimate smc;
  SmcConfig smc_config;
};

/// GS and SMC replications at a matched per-run effort budget. The SMC
/// particle count is the largest N whose effort fits in the budget.
template <SplittingModel Model>
Comparison compare_gs_smc(const Model& model, const LevelSchedule& schedule, std::uint64_t budget,
                          std::size_t replications, std::size_t moves_per_level, const SeedSequence& seeds,
                          const SplittingOptions& options = {}) {
  SmcConfig config;
  config.moves_per_level = moves_per_level;
  config.particle_count = budget / (1 + moves_per_level * (schedule.depth() - 1));
  if (config.particle_count < 2) throw InvalidArgument("compare_gs_smc: budget too small for SMC");
  Comparison out;
  out.smc_config = config;
  out.gs = run_gs_budget_replications(model, schedule, budget, replications, seeds, options);
  out.smc = run_smc_replications(model, schedule, config, replications, seeds, options.workers);
  return out;
}

}  // namespace gsplit
