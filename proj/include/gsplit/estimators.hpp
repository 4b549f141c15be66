#pragma once

// Rare-event probability estimation from unconditioned GS trials,
// conditional probabilities from collected ledgers, and marginal summaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gsplit/errors.hpp"
#include "gsplit/model.hpp"
#include "gsplit/predicates.hpp"
#include "gsplit/splitting.hpp"

namespace gsplit {

struct ProbabilityEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  /// standard_error / value; NaN when value == 0.
  double relative_error = std::numeric_limits<double>::quiet_NaN();
  std::size_t trial_count = 0;
  /// Mean number of retained states per unconditioned trial.
  double raw_mean_size = 0.0;

  bool relative_error_defined() const { return std::isfinite(relative_error); }
};

namespace detail {

inline ProbabilityEstimate mean_estimate(std::span<const double> values, double scale) {
  if (values.empty()) throw InsufficientData("probability estimate: no trials");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;

  ProbabilityEstimate est;
  est.trial_count = values.size();
  est.raw_mean_size = mean;
  est.value = mean / scale;
  est.standard_error = sd / (std::sqrt(n) * scale);
  if (mean > 0.0) est.relative_error = sd / (mean * std::sqrt(n));
  return est;
}

}  // namespace detail

/// l_hat = mean(M_raw) / s^(tau-1) from unconditioned trial sizes (zeros
/// included), with relative error sd(M_raw) / (mean(M_raw) sqrt(n)).
inline ProbabilityEstimate estimate_rare_event_probability(std::span<const double> raw_sizes,
                                                           const LevelSchedule& schedule) {
  return detail::mean_estimate(raw_sizes, schedule.branching_scale());
}

inline ProbabilityEstimate estimate_rare_event_probability(std::span<const TrialResult> raw_trials,
                                                           const LevelSchedule& schedule) {
  std::vector<double> sizes;
  sizes.reserve(raw_trials.size());
  for (const auto& t : raw_trials) sizes.push_back(static_cast<double>(t.size()));
  return estimate_rare_event_probability(std::span<const double>(sizes), schedule);
}

/// Uses every unconditioned trial behind a ledger, discarded empties as zeros.
/// For a fixed-n ledger the trial count is itself random, so this is a ratio
/// estimator with O(1/n) bias.
inline ProbabilityEstimate estimate_rare_event_probability(const RunLedger& ledger) {
  const std::vector<double> raw = ledger.raw_sizes();
  return estimate_rare_event_probability(std::span<const double>(raw), ledger.schedule());
}

/// mean of H(A) / s^(tau-1), where H(A) counts a trial's retained states in A.
/// Unbiased for P(X in A, S(X) >= gamma) only when fed unconditioned trials;
/// fed non-empty trials it is biased upward by 1 / P(M > 0).
inline ProbabilityEstimate estimate_set_probability(std::span<const TrialResult> trials,
                                                    const LevelSchedule& schedule,
                                                    const SetPredicate& set) {
  std::vector<double> hits;
  hits.reserve(trials.size());
  for (const auto& t : trials) {
    double h = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) h += set.contains(t.retained[i]) ? 1.0 : 0.0;
    hits.push_back(h);
  }
  return detail::mean_estimate(hits, schedule.branching_scale());
}

/// Q_hat(A) = sum H_i(A) / sum M_i with a delta-method standard error over trials.
inline ProbabilityEstimate estimate_conditional_probability(const RunLedger& ledger,
                                                            const SetPredicate& set) {
  const std::size_t n = ledger.trial_count();
  if (n == 0) throw InsufficientData("estimate_conditional_probability: empty ledger");
  std::vector<double> hits(n), sizes(n);
  double hit_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = ledger.trials()[i];
    for (std::size_t k = 0; k < t.size(); ++k) hits[i] += set.contains(t.retained[k]) ? 1.0 : 0.0;
    sizes[i] = static_cast<double>(t.size());
    hit_total += hits[i];
  }
  const double size_total = static_cast<double>(ledger.total_states());
  const double ratio = hit_total / size_total;
  const double nn = static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double resid = hits[i] - ratio * sizes[i];
    ss += resid * resid;
  }
  const double mean_size = size_total / nn;
  ProbabilityEstimate est;
  est.value = ratio;
  est.trial_count = n;
  est.raw_mean_size = mean_size;
  est.standard_error = n > 1 ? std::sqrt(ss / (nn - 1.0) / nn) / mean_size : 0.0;
  if (ratio > 0.0) est.relative_error = est.standard_error / ratio;
  return est;
}

struct OracleCheck {
  ProbabilityEstimate estimate;
  double target = 0.0;
  double z = 0.0;

  bool within(double k) const { return std::abs(z) <= k; }
};

template <class Model>
concept HasClosedFormProbability = requires(const Model& m, const SetPredicate& a, const LevelConstraint& c) {
  { m.joint_probability(a, c) } -> std::convertible_to<std::optional<double>>;
};

/// Compares mean H(A)/s^(tau-1) over fresh unconditioned trials with the
/// model's closed-form P(X in A, S(X) >= gamma); reports the z-score.
template <SplittingModel Model>
OracleCheck unbiasedness_oracle_check(const Model& model, const LevelSchedule& schedule,
                                      const SetPredicate& set, std::uint64_t trials,
                                      const SeedSequence& seeds, const SplittingOptions& options = {}) {
  std::optional<double> target;
  if constexpr (HasClosedFormProbability<Model>) {
    target = model.joint_probability(set, schedule.constraint(schedule.depth() - 1));
  }
  if (!target) throw UnsupportedModel("unbiasedness_oracle_check: model has no closed form for this set");
  const std::vector<TrialResult> raw = collect_raw_trials(model, schedule, trials, seeds, options);
  OracleCheck check;
  check.estimate = estimate_set_probability(std::span<const TrialResult>(raw), schedule, set);
  check.target = *target;
  const double se = check.estimate.standard_error;
  check.z = se > 0.0 ? (check.estimate.value - check.target) / se
                     : (check.estimate.value == check.target ? 0.0 : std::numeric_limits<double>::infinity());
  return check;
}

/// Linear-interpolation sample quantile ("type 7") of sorted data.
inline double quantile_type7(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InsufficientData("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

struct MarginalSummary {
  std::size_t coordinate = 0;
  double q05 = 0, q25 = 0, q50 = 0, q75 = 0, q95 = 0;
  std::optional<double> reference;
};

/// Quantiles of each of the first `coordinates` marginals of Q_hat.
/// `reference`, when given, is attached per coordinate (e.g. least squares).
inline std::vector<MarginalSummary> marginal_summaries(const RunLedger& ledger, std::size_t coordinates,
                                                       std::span<const double> reference = {}) {
  const std::size_t dim = ledger.dimension();
  if (coordinates > dim) throw InvalidArgument("marginal_summaries: more coordinates than the state has");
  std::vector<MarginalSummary> out;
  std::vector<double> column;
  column.reserve(ledger.total_states());
  for (std::size_t j = 0; j < coordinates; ++j) {
    column.clear();
    for (const auto& t : ledger.trials()) {
      for (std::size_t i = 0; i < t.size(); ++i) column.push_back(t.retained[i][j]);
    }
    std::sort(column.begin(), column.end());
    MarginalSummary s;
    s.coordinate = j;
    s.q05 = quantile_type7(column, 0.05);
    s.q25 = quantile_type7(column, 0.25);
    s.q50 = quantile_type7(column, 0.50);
    s.q75 = quantile_type7(column, 0.75);
    s.q95 = quantile_type7(column, 0.95);
    if (j < reference.size()) s.reference = reference[j];
    out.push_back(s);
  }
  return out;
}

}  // namespace gsplit
