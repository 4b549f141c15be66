#pragma once

// Generalized splitting: the branching trial, the retry-until-non-empty
// wrapper, and the two collection strategies (fixed number of non-empty
// trials, or trials until more than t states have been retained).

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsplit/errors.hpp"
#include "gsplit/model.hpp"
#include "gsplit/parallel.hpp"
#include "gsplit/random.hpp"
#include "gsplit/state.hpp"

namespace gsplit {

struct SplittingOptions {
  /// Abort a trial when any level list holds more states than this.
  std::size_t memory_cap = 10'000'000;
  /// Consecutive empty trials tolerated by run_nonempty_trial.
  std::uint64_t retry_cap = 1'000'000;
  /// Threads for independent trials; 0 means all cores.
  unsigned workers = 1;
};

struct TrialResult {
  StateList retained;
  /// |X_1|, ..., |X_tau|: states that reached each level (zeros after extinction).
  std::vector<std::uint64_t> level_counts;
  std::uint64_t kernel_steps = 0;
  std::uint64_t discarded_empty_trials = 0;
  /// Kernel steps spent inside the discarded empty trials.
  std::uint64_t discarded_kernel_steps = 0;

  std::size_t size() const { return retained.size(); }

  /// Total simulation effort in state units: one per draw from f plus one
  /// per kernel step, including the discarded trials.
  std::uint64_t effort() const {
    return 1 + discarded_empty_trials + kernel_steps + discarded_kernel_steps;
  }

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

enum class StoppingKind { FixedN, ExceedT };

struct StoppingRule {
  StoppingKind kind = StoppingKind::FixedN;
  std::uint64_t value = 1;

  static StoppingRule fixed_n(std::uint64_t n) { return {StoppingKind::FixedN, n}; }
  static StoppingRule exceed_t(std::uint64_t t) { return {StoppingKind::ExceedT, t}; }

  friend bool operator==(const StoppingRule&, const StoppingRule&) = default;
};

inline const char* to_string(StoppingKind k) { return k == StoppingKind::FixedN ? "fixed_n" : "exceed_t"; }

/// Ordered non-empty trials with their cumulative sizes T_1 < T_2 < ...,
/// i.e. the renewal-process view of a run.
class RunLedger {
 public:
  RunLedger(LevelSchedule schedule, StoppingRule rule, std::vector<TrialResult> trials)
      : schedule_(std::move(schedule)), rule_(rule), trials_(std::move(trials)) {
    std::uint64_t total = 0;
    cumulative_.reserve(trials_.size());
    for (const auto& trial : trials_) {
      if (trial.size() == 0) throw InvalidArgument("RunLedger: trials must be non-empty");
      total += trial.size();
      cumulative_.push_back(total);
    }
    if (rule_.kind == StoppingKind::FixedN && trials_.size() != rule_.value) {
      throw InvalidArgument("RunLedger: fixed-n ledger must hold exactly n trials");
    }
    if (rule_.kind == StoppingKind::ExceedT) {
      const std::size_t n = trials_.size();
      if (n == 0 || cumulative_.back() <= rule_.value ||
          (n > 1 && cumulative_[n - 2] > rule_.value)) {
        throw InvalidArgument("RunLedger: trials do not match the exceed-t stopping rule");
      }
    }
  }

  const LevelSchedule& schedule() const { return schedule_; }
  const StoppingRule& stopping_rule() const { return rule_; }
  const std::vector<TrialResult>& trials() const { return trials_; }
  std::size_t trial_count() const { return trials_.size(); }

  /// T_i for i = 1..N.
  const std::vector<std::uint64_t>& cumulative_sizes() const { return cumulative_; }
  std::uint64_t total_states() const { return cumulative_.empty() ? 0 : cumulative_.back(); }
  std::size_t dimension() const { return trials_.empty() ? 0 : trials_.front().retained.dimension(); }

  /// M_1, ..., M_N as reals.
  std::vector<double> sizes() const {
    std::vector<double> out;
    out.reserve(trials_.size());
    for (const auto& t : trials_) out.push_back(static_cast<double>(t.size()));
    return out;
  }

  /// Sizes of every underlying unconditioned trial, discarded empties included
  /// as zeros, in the order they were simulated.
  std::vector<double> raw_sizes() const {
    std::vector<double> out;
    for (const auto& t : trials_) {
      out.insert(out.end(), t.discarded_empty_trials, 0.0);
      out.push_back(static_cast<double>(t.size()));
    }
    return out;
  }

  std::uint64_t total_effort() const {
    std::uint64_t e = 0;
    for (const auto& t : trials_) e += t.effort();
    return e;
  }

  friend bool operator==(const RunLedger&, const RunLedger&) = default;

 private:
  LevelSchedule schedule_;
  StoppingRule rule_;
  std::vector<TrialResult> trials_;
  std::vector<std::uint64_t> cumulative_;
};

namespace detail {

inline void require_finite(std::span<const double> x, const char* where) {
  if (!all_finite(x)) throw KernelFailure(std::string(where) + " produced a non-finite state");
}

}  // namespace detail

/// One unconditioned GS trial. The f-draw is tested against the first level
/// directly; kernels only run between levels. Each state at level l-1 spawns
/// a chain of s kernel steps and every step that reaches level l is kept.
template <SplittingModel Model>
TrialResult run_gs_trial(const Model& model, const LevelSchedule& schedule, RandomStream& rng,
                         const SplittingOptions& options = {}) {
  const std::size_t dim = model.dimension();
  const std::size_t depth = schedule.depth();
  TrialResult result;
  result.retained = StateList(dim);
  result.level_counts.assign(depth, 0);

  State y(dim);
  model.sample_f(rng, std::span<double>(y));
  detail::require_finite(y, "sample_f");
  if (!schedule.reaches(model.importance(y), 0)) return result;

  StateList current(dim);
  current.push_back(y);
  result.level_counts[0] = 1;

  const auto s = static_cast<std::size_t>(schedule.split_factor());
  State work(dim);
  for (std::size_t l = 1; l < depth && !current.empty(); ++l) {
    const LevelConstraint support = schedule.constraint(l - 1);
    StateList next(dim);
    for (std::size_t i = 0; i < current.size(); ++i) {
      const auto start = current[i];
      std::copy(start.begin(), start.end(), work.begin());
      for (std::size_t j = 0; j < s; ++j) {
        model.kernel_step(support, std::span<double>(work), rng);
        ++result.kernel_steps;
        detail::require_finite(work, "kernel_step");
        const double score = model.importance(std::span<const double>(work));
        if (!support.admits(score)) {
          throw KernelFailure("kernel for level " + std::to_string(l) + " left its support");
        }
        if (schedule.reaches(score, l)) {
          next.push_back(work);
          if (next.size() > options.memory_cap) {
            throw SizingError("level " + std::to_string(l + 1) + " list exceeded the memory cap of " +
                              std::to_string(options.memory_cap) + " states");
          }
        }
      }
    }
    current = std::move(next);
    result.level_counts[l] = current.size();
  }
  result.retained = std::move(current);
  return result;
}

/// Repeats run_gs_trial until it returns at least one state.
template <SplittingModel Model>
TrialResult run_nonempty_trial(const Model& model, const LevelSchedule& schedule, RandomStream& rng,
                               const SplittingOptions& options = {}) {
  std::uint64_t discarded = 0;
  std::uint64_t discarded_steps = 0;
  for (;;) {
    TrialResult trial = run_gs_trial(model, schedule, rng, options);
    if (trial.size() > 0) {
      trial.discarded_empty_trials = discarded;
      trial.discarded_kernel_steps = discarded_steps;
      return trial;
    }
    ++discarded;
    discarded_steps += trial.kernel_steps;
    if (discarded >= options.retry_cap) {
      throw RetryBudgetExceeded("no non-empty trial after " + std::to_string(discarded) +
                                " attempts; the first level is probably too deep for f");
    }
  }
}

/// n independent non-empty trials; trial i uses stream (Trial, i), so the
/// ledger is identical for any worker count.
template <SplittingModel Model>
RunLedger collect_fixed_n(const Model& model, const LevelSchedule& schedule, std::uint64_t n,
                          const SeedSequence& seeds, const SplittingOptions& options = {}) {
  if (n == 0) throw InvalidArgument("collect_fixed_n: n must be >= 1");
  std::vector<TrialResult> trials(n);
  parallel_for_index(n, options.workers, [&](std::size_t i) {
    RandomStream rng = seeds.stream(StreamDomain::Trial, i);
    trials[i] = run_nonempty_trial(model, schedule, rng, options);
  });
  return RunLedger(schedule, StoppingRule::fixed_n(n), std::move(trials));
}

/// Non-empty trials until the total number of retained states exceeds t.
template <SplittingModel Model>
RunLedger collect_until_t(const Model& model, const LevelSchedule& schedule, std::uint64_t t,
                          const SeedSequence& seeds, const SplittingOptions& options = {}) {
  if (t == 0) throw InvalidArgument("collect_until_t: t must be >= 1");
  std::vector<TrialResult> trials;
  std::uint64_t total = 0;
  for (std::uint64_t i = 0; total <= t; ++i) {
    RandomStream rng = seeds.stream(StreamDomain::Trial, i);
    trials.push_back(run_nonempty_trial(model, schedule, rng, options));
    total += trials.back().size();
  }
  return RunLedger(schedule, StoppingRule::exceed_t(t), std::move(trials));
}

/// `count` unconditioned trials (empty ones included), trial i on stream (RawTrial, i).
template <SplittingModel Model>
std::vector<TrialResult> collect_raw_trials(const Model& model, const LevelSchedule& schedule,
                                            std::uint64_t count, const SeedSequence& seeds,
                                            const SplittingOptions& options = {}) {
  std::vector<TrialResult> trials(count);
  parallel_for_index(count, options.workers, [&](std::size_t i) {
    RandomStream rng = seeds.stream(StreamDomain::RawTrial, i);
    trials[i] = run_gs_trial(model, schedule, rng, options);
  });
  return trials;
}

/// Q_hat(A): fraction of all retained states, pooled over trials, for which
/// `contains` is true.
template <class Predicate>
double empirical_measure(const RunLedger& ledger, Predicate&& contains) {
  if (ledger.trial_count() == 0) throw InvalidArgument("empirical_measure: empty ledger");
  std::uint64_t hits = 0;
  for (const auto& trial : ledger.trials()) {
    for (std::size_t i = 0; i < trial.size(); ++i) {
      if (contains(trial.retained[i])) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(ledger.total_states());
}

/// Estimated conditional passage rates rho_1, ..., rho_tau from raw trials:
/// rho_1 = P(S >= gamma_1), rho_l = |X_l| / (s |X_{l-1}|) pooled.
inline std::vector<double> passage_rates(std::span<const TrialResult> raw_trials,
                                         const LevelSchedule& schedule) {
  const std::size_t depth = schedule.depth();
  std::vector<double> counts(depth, 0.0);
  for (const auto& t : raw_trials) {
    for (std::size_t l = 0; l < depth && l < t.level_counts.size(); ++l) {
      counts[l] += static_cast<double>(t.level_counts[l]);
    }
  }
  std::vector<double> rho(depth, 0.0);
  if (raw_trials.empty()) return rho;
  rho[0] = counts[0] / static_cast<double>(raw_trials.size());
  for (std::size_t l = 1; l < depth; ++l) {
    rho[l] = counts[l - 1] > 0 ? counts[l] / (schedule.split_factor() * counts[l - 1]) : 0.0;
  }
  return rho;
}

}  // namespace gsplit
