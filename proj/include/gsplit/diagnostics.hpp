#pragma once

// Moment estimates of the trial size M and the error bounds they feed:
// TV and mean-absolute-error bounds for fixed-n and until-t collection,
// the asymptotic until-t bound, and the two expected-TV bounds over a set
// class of finite VC dimension. Also renewal sanity checks (Wald identity,
// overshoot) and the empirical Kolmogorov-Smirnov distance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsplit/errors.hpp"
#include "gsplit/splitting.hpp"

namespace gsplit {

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Moments of the non-empty trial size M. `m2_abs_dev` is E[M^2 |M - 1 - 2r|]
/// with r = (E[M^2] + m) / (2m) taken from the same moments.
struct MomentSummary {
  Estimate m;
  Estimate m2;
  Estimate m3;
  Estimate m4;
  Estimate m2logm;
  Estimate var;
  Estimate m2_abs_dev;
  double r = 0.0;
  std::size_t sample_count = 0;
};

namespace detail {

struct RawMoments {
  double m = 0, m2 = 0, m3 = 0, m4 = 0, m2logm = 0;
};

inline double m_log_term(double v) { return v == 1.0 ? 0.0 : v * v * std::log(v); }

// Moments of a weighted discrete distribution (weights need not sum to 1).
inline RawMoments raw_moments(const std::vector<std::pair<double, double>>& atoms) {
  RawMoments out;
  double total = 0.0;
  for (const auto& [v, w] : atoms) {
    total += w;
    const double v2 = v * v;
    out.m += w * v;
    out.m2 += w * v2;
    out.m3 += w * v2 * v;
    out.m4 += w * v2 * v2;
    out.m2logm += w * m_log_term(v);
  }
  out.m /= total;
  out.m2 /= total;
  out.m3 /= total;
  out.m4 /= total;
  out.m2logm /= total;
  return out;
}

inline double abs_dev_moment(const std::vector<std::pair<double, double>>& atoms, double r) {
  double sum = 0.0;
  double total = 0.0;
  for (const auto& [v, w] : atoms) {
    sum += w * v * v * std::abs(v - 1.0 - 2.0 * r);
    total += w;
  }
  return sum / total;
}

inline MomentSummary summary_from_atoms(const std::vector<std::pair<double, double>>& atoms) {
  const RawMoments raw = raw_moments(atoms);
  MomentSummary s;
  s.m.value = raw.m;
  s.m2.value = raw.m2;
  s.m3.value = raw.m3;
  s.m4.value = raw.m4;
  s.m2logm.value = raw.m2logm;
  s.var.value = std::max(0.0, raw.m2 - raw.m * raw.m);
  s.r = (raw.m2 + raw.m) / (2.0 * raw.m);
  s.m2_abs_dev.value = abs_dev_moment(atoms, s.r);
  return s;
}

}  // namespace detail

/// Moments of an exactly known distribution of M, given as (value, probability)
/// pairs. Standard errors are zero.
inline MomentSummary exact_moments(std::span<const std::pair<double, double>> pmf) {
  std::vector<std::pair<double, double>> atoms(pmf.begin(), pmf.end());
  double total = 0.0;
  for (const auto& [v, p] : atoms) {
    if (!(v >= 1.0) || !(p >= 0.0)) throw InvalidArgument("exact_moments: need values >= 1, p >= 0");
    total += p;
  }
  if (!(total > 0.0)) throw InvalidArgument("exact_moments: empty distribution");
  MomentSummary s = detail::summary_from_atoms(atoms);
  s.sample_count = 0;
  return s;
}

/// Plug-in moments of the observed trial sizes with jackknife standard errors
/// (leave-one-trial-out; trials are iid).
inline MomentSummary estimate_moments(std::span<const double> sizes) {
  if (sizes.size() < 2) throw InsufficientData("estimate_moments: need at least 2 trials");
  std::map<double, double> histogram;
  for (double v : sizes) {
    if (!(v >= 1.0)) throw InvalidArgument("estimate_moments: trial sizes must be >= 1");
    histogram[v] += 1.0;
  }
  std::vector<std::pair<double, double>> atoms(histogram.begin(), histogram.end());
  MomentSummary s = detail::summary_from_atoms(atoms);
  const double n = static_cast<double>(sizes.size());
  s.sample_count = sizes.size();

  // Leaving out one trial only matters through its value, so the jackknife
  // runs over distinct values weighted by their counts.
  struct Loo {
    double m, m2, m3, m4, m2logm, var, absdev;
  };
  std::vector<Loo> loo;
  loo.reserve(atoms.size());
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    auto reduced = atoms;
    reduced[k].second -= 1.0;
    const detail::RawMoments raw = detail::raw_moments(reduced);
    const double r = (raw.m2 + raw.m) / (2.0 * raw.m);
    loo.push_back({raw.m, raw.m2, raw.m3, raw.m4, raw.m2logm, raw.m2 - raw.m * raw.m,
                   detail::abs_dev_moment(reduced, r)});
  }
  auto jackknife = [&](auto field) {
    double mean = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) mean += atoms[k].second * field(loo[k]);
    mean /= n;
    double ss = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      const double d = field(loo[k]) - mean;
      ss += atoms[k].second * d * d;
    }
    return std::sqrt((n - 1.0) / n * ss);
  };
  s.m.standard_error = jackknife([](const Loo& l) { return l.m; });
  s.m2.standard_error = jackknife([](const Loo& l) { return l.m2; });
  s.m3.standard_error = jackknife([](const Loo& l) { return l.m3; });
  s.m4.standard_error = jackknife([](const Loo& l) { return l.m4; });
  s.m2logm.standard_error = jackknife([](const Loo& l) { return l.m2logm; });
  s.var.standard_error = jackknife([](const Loo& l) { return l.var; });
  s.m2_abs_dev.standard_error = jackknife([](const Loo& l) { return l.absdev; });
  return s;
}

inline MomentSummary estimate_moments(const RunLedger& ledger) {
  const std::vector<double> sizes = ledger.sizes();
  return estimate_moments(std::span<const double>(sizes));
}

/// The class of sets over which a TV distance is taken, by VC dimension.
struct SetClass {
  enum class Kind { OneSidedIntervals, Rectangles, Custom };
  Kind kind = Kind::Custom;
  std::size_t dimension = 0;
  std::size_t vc = 1;

  static SetClass one_sided_intervals(std::size_t d) { return {Kind::OneSidedIntervals, d, d + 1}; }
  static SetClass rectangles(std::size_t d) { return {Kind::Rectangles, d, 2 * d}; }
  static SetClass custom(std::size_t v) {
    if (v == 0) throw InvalidArgument("SetClass: VC dimension must be >= 1");
    return {Kind::Custom, 0, v};
  }
};

inline std::string to_string(const SetClass& c) {
  switch (c.kind) {
    case SetClass::Kind::OneSidedIntervals: return "one_sided_intervals(" + std::to_string(c.dimension) + ")";
    case SetClass::Kind::Rectangles: return "rectangles(" + std::to_string(c.dimension) + ")";
    case SetClass::Kind::Custom: break;
  }
  return "custom(" + std::to_string(c.vc) + ")";
}

struct BoundValue {
  double constant = 0.0;
  double bound = 0.0;
  /// Bounds above 1 say nothing about a probability distance but are still reported.
  bool vacuous() const { return bound > 1.0; }
};

struct AsymptoticBound {
  double c3 = 0.0;
  double r = 0.0;
  double bound = 0.0;
  /// Always true: the O(exp(-omega t)) term of this bound is not estimable and is left out.
  bool omits_exponential_term = true;
  bool vacuous() const { return bound > 1.0; }
};

struct ExpectedTvBound {
  /// psi_1 (reported only when E[M^2 ln M] > 0) or psi_2.
  std::optional<double> psi;
  double bound = 0.0;
  bool vacuous() const { return bound > 1.0; }
};

namespace detail {

inline void require_valid(const MomentSummary& s) {
  if (!(s.m.value >= 1.0) || !std::isfinite(s.m2.value)) {
    throw InvalidArgument("moment summary is not valid (need m >= 1 and finite moments)");
  }
}

inline void require_positive(double x, const char* what) {
  if (!(x > 0.0)) throw InvalidArgument(std::string(what) + " must be positive");
}

}  // namespace detail

/// Fixed-n TV bound c1 / n with c1 = (var(M) + sqrt(var(M) E[M^2])) / m^2.
inline BoundValue bound_tv_fixed_n(const MomentSummary& s, double n) {
  detail::require_valid(s);
  detail::require_positive(n, "n");
  const double m = s.m.value;
  const double c1 = (s.var.value + std::sqrt(s.var.value * s.m2.value)) / (m * m);
  return {c1, c1 / n};
}

/// Fixed-n worst-case mean absolute error c1~(n) n^(-1/2),
/// c1~(n) = (sqrt(E M^2) + sqrt(3 E M^4 / n)) / m.
inline BoundValue bound_mae_fixed_n(const MomentSummary& s, double n) {
  detail::require_valid(s);
  detail::require_positive(n, "n");
  const double c = (std::sqrt(s.m2.value) + std::sqrt(3.0 * s.m4.value / n)) / s.m.value;
  return {c, c / std::sqrt(n)};
}

/// Until-t TV bound c2(t) (t/m)^(-3/2),
/// c2(t) = sqrt((4/3) E[M^3] E[M^2] (m + E[M^2]/t)) / m^3.
inline BoundValue bound_tv_until_t(const MomentSummary& s, double t) {
  detail::require_valid(s);
  detail::require_positive(t, "t");
  const double m = s.m.value;
  const double c2 = std::sqrt(4.0 / 3.0 * s.m3.value * s.m2.value * (m + s.m2.value / t)) / (m * m * m);
  return {c2, c2 * std::pow(t / m, -1.5)};
}

/// Until-t mean absolute error c2~(t) (t/m)^(-1/2),
/// c2~(t) = sqrt(E M^2) / m + E[M^2] m^(-3/2) t^(-1/2).
inline BoundValue bound_mae_until_t(const MomentSummary& s, double t) {
  detail::require_valid(s);
  detail::require_positive(t, "t");
  const double m = s.m.value;
  const double c = std::sqrt(s.m2.value) / m + s.m2.value / (std::pow(m, 1.5) * std::sqrt(t));
  return {c, c / std::sqrt(t / m)};
}

/// Asymptotic until-t TV bound c3 (t/m)^(-2), c3 = E[M^2 |M-1-2r|] / (2 m^3).
inline AsymptoticBound bound_tv_asymptotic(const MomentSummary& s, double t) {
  detail::require_valid(s);
  detail::require_positive(t, "t");
  const double m = s.m.value;
  AsymptoticBound out;
  out.r = s.r;
  out.c3 = s.m2_abs_dev.value / (2.0 * m * m * m);
  out.bound = out.c3 * std::pow(t / m, -2.0);
  return out;
}

/// First expected-TV bound b5(n), in the combined form
/// sqrt(var M)/(m sqrt n) + 2 sqrt((ln2 + v + v ln(2n/v)) E[M^2] + v E[M^2 ln M]) / (m sqrt n),
/// which equals the psi_1 product form and stays finite when E[M^2 ln M] = 0.
/// Requires 2n >= v; below that the bound is reported as +inf.
inline ExpectedTvBound bound_expected_tv_b5(const MomentSummary& s, double n, const SetClass& sets) {
  detail::require_valid(s);
  detail::require_positive(n, "n");
  const double v = static_cast<double>(sets.vc);
  const double m = s.m.value;
  const double root_n = std::sqrt(n);
  ExpectedTvBound out;
  if (2.0 * n < v) {
    out.bound = std::numeric_limits<double>::infinity();
    return out;
  }
  const double entropy = std::numbers::ln2 + v + v * std::log(2.0 * n / v);
  const double radicand = entropy * s.m2.value + v * s.m2logm.value;
  out.bound = std::sqrt(s.var.value) / (m * root_n) + 2.0 * std::sqrt(radicand) / (m * root_n);
  if (s.m2logm.value > 0.0) {
    const double log2n = std::log(2.0 * n);
    out.psi = std::sqrt(entropy * s.m2.value / (v * log2n * s.m2logm.value) + 1.0 / log2n);
  }
  return out;
}

/// Upper summation limit ceil(tau + log_s sqrt(n)); values within rounding
/// of an integer are snapped to it first.
inline std::size_t psi2_terms(std::size_t depth, double n, int split) {
  const double x = static_cast<double>(depth) + 0.5 * std::log(n) / std::log(static_cast<double>(split));
  const double nearest = std::round(x);
  const double k = std::abs(x - nearest) < 1e-9 * std::max(1.0, std::abs(x)) ? nearest : std::ceil(x);
  return static_cast<std::size_t>(std::max(k, 0.0));
}

/// psi_2 = sum_{k=1}^{K} s^-k (ln2/(2nv) + (1+ln(v+1))/v + 1 + ln(2 s^(2k)))^(1/2).
/// A `terms_override` evaluates the sum to that many terms instead of K.
inline double psi2(std::size_t depth, double vc, double n, int split,
                   std::optional<std::size_t> terms_override = std::nullopt) {
  const std::size_t terms = terms_override.value_or(psi2_terms(depth, n, split));
  const double s = static_cast<double>(split);
  const double ln_s = std::log(s);
  const double fixed = std::numbers::ln2 / (2.0 * n * vc) + (1.0 + std::log(vc + 1.0)) / vc + 1.0;
  double sum = 0.0;
  for (std::size_t k = 1; k <= terms; ++k) {
    const double kk = static_cast<double>(k);
    sum += std::exp(-kk * ln_s) * std::sqrt(fixed + std::numbers::ln2 + 2.0 * kk * ln_s);
  }
  return sum;
}

/// Second expected-TV bound b6(n) =
/// sqrt(var M)/(m sqrt n) + 4 (s+1) sqrt(v E[M^2]) psi_2 / (m sqrt n).
inline ExpectedTvBound bound_expected_tv_b6(const MomentSummary& s, double n, const SetClass& sets,
                                            int split, std::size_t depth) {
  detail::require_valid(s);
  detail::require_positive(n, "n");
  if (split < 2 || depth < 1) throw InvalidArgument("bound_expected_tv_b6: need s >= 2 and tau >= 1");
  const double v = static_cast<double>(sets.vc);
  const double m = s.m.value;
  const double root_n = std::sqrt(n);
  ExpectedTvBound out;
  out.psi = psi2(depth, v, n, split);
  out.bound = std::sqrt(s.var.value) / (m * root_n) +
              4.0 * (split + 1.0) * std::sqrt(v * s.m2.value) * *out.psi / (m * root_n);
  return out;
}

/// Every bound evaluated at one (n, t) pair.
struct BoundReport {
  MomentSummary moments;
  double n = 0.0;
  double t = 0.0;
  SetClass set_class;
  int split_factor = 2;
  std::size_t depth = 1;
  BoundValue tv_fixed_n;
  BoundValue mae_fixed_n;
  BoundValue tv_until_t;
  BoundValue mae_until_t;
  AsymptoticBound tv_asymptotic;
  ExpectedTvBound b5;
  ExpectedTvBound b6;
};

inline BoundReport evaluate_bounds(const MomentSummary& s, double n, double t, const SetClass& sets,
                                   int split, std::size_t depth) {
  BoundReport rep;
  rep.moments = s;
  rep.n = n;
  rep.t = t;
  rep.set_class = sets;
  rep.split_factor = split;
  rep.depth = depth;
  rep.tv_fixed_n = bound_tv_fixed_n(s, n);
  rep.mae_fixed_n = bound_mae_fixed_n(s, n);
  rep.tv_until_t = bound_tv_until_t(s, t);
  rep.mae_until_t = bound_mae_until_t(s, t);
  rep.tv_asymptotic = bound_tv_asymptotic(s, t);
  rep.b5 = bound_expected_tv_b5(s, n, sets);
  rep.b6 = bound_expected_tv_b6(s, n, sets, split, depth);
  return rep;
}

/// One line of a bound curve table.
struct BoundRow {
  double n_or_t;
  std::string criterion;
  double constant;
  double bound;
  bool vacuous;
};

inline std::vector<BoundRow> bound_rows(const BoundReport& r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {
      {r.n, "tv_fixed_n", r.tv_fixed_n.constant, r.tv_fixed_n.bound, r.tv_fixed_n.vacuous()},
      {r.n, "mae_fixed_n", r.mae_fixed_n.constant, r.mae_fixed_n.bound, r.mae_fixed_n.vacuous()},
      {r.t, "tv_until_t", r.tv_until_t.constant, r.tv_until_t.bound, r.tv_until_t.vacuous()},
      {r.t, "mae_until_t", r.mae_until_t.constant, r.mae_until_t.bound, r.mae_until_t.vacuous()},
      {r.t, "tv_asymptotic", r.tv_asymptotic.c3, r.tv_asymptotic.bound, r.tv_asymptotic.vacuous()},
      {r.n, "expected_tv_b5", r.b5.psi.value_or(nan), r.b5.bound, r.b5.vacuous()},
      {r.n, "expected_tv_b6", r.b6.psi.value_or(nan), r.b6.bound, r.b6.vacuous()},
  };
}

/// Bound curves on a grid of n, with the until-t bounds placed on the same
/// effort scale t = n m.
inline std::vector<BoundRow> bound_curves(const MomentSummary& s, std::span<const double> n_grid,
                                          const SetClass& sets, int split, std::size_t depth) {
  std::vector<BoundRow> rows;
  for (double n : n_grid) {
    const auto part = bound_rows(evaluate_bounds(s, n, n * s.m.value, sets, split, depth));
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

/// Renewal checks over independent replications of the until-t process.
struct WaldReport {
  std::size_t replications = 0;
  double t = 0.0;
  double reference_m = 0.0;
  double mean_stopped_total = 0.0;  // mean of T_{N(t)}
  double mean_trial_count = 0.0;    // mean of N(t)
  /// mean(T_{N(t)}) - mean(N(t)) m; zero in expectation by Wald's identity.
  Estimate discrepancy;
  /// R(t) = T_{N(t)} - t, and Lorden's bound E[M^2]/m on its mean.
  Estimate mean_overshoot;
  double lorden_bound = 0.0;
  /// r_hat(t) = m mean(N(t)) - t, which tends to r = (E M^2 + m) / (2m).
  Estimate renewal_offset;
  double limit_offset = 0.0;
};

/// `reference` must come from trials independent of the replications (the
/// pooled mean of the stopped runs satisfies the identity trivially).
inline WaldReport wald_check(std::span<const RunLedger> replications, const MomentSummary& reference) {
  if (replications.size() < 2) throw InsufficientData("wald_check: need at least 2 replications");
  const StoppingRule rule = replications.front().stopping_rule();
  for (const auto& l : replications) {
    if (l.stopping_rule().kind != StoppingKind::ExceedT || l.stopping_rule() != rule) {
      throw InvalidArgument("wald_check: every ledger must use the same exceed-t stopping rule");
    }
  }
  detail::require_valid(reference);
  const double t = static_cast<double>(rule.value);
  const double m = reference.m.value;
  const double k = static_cast<double>(replications.size());

  std::vector<double> totals, counts, diffs, overshoots;
  for (const auto& l : replications) {
    const double total = static_cast<double>(l.total_states());
    const double count = static_cast<double>(l.trial_count());
    totals.push_back(total);
    counts.push_back(count);
    diffs.push_back(total - count * m);
    overshoots.push_back(total - t);
  }
  auto mean_of = [&](const std::vector<double>& x) {
    double sum = 0.0;
    for (double v : x) sum += v;
    return sum / static_cast<double>(x.size());
  };
  auto se_of = [&](const std::vector<double>& x) {
    const double mu = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    return std::sqrt(ss / (k - 1.0) / k);
  };

  WaldReport rep;
  rep.replications = replications.size();
  rep.t = t;
  rep.reference_m = m;
  rep.mean_stopped_total = mean_of(totals);
  rep.mean_trial_count = mean_of(counts);
  const double m_se = reference.m.standard_error;
  const double count_se = se_of(counts);
  rep.discrepancy.value = mean_of(diffs);
  rep.discrepancy.standard_error =
      std::sqrt(std::pow(se_of(diffs), 2) + std::pow(rep.mean_trial_count * m_se, 2));
  rep.mean_overshoot = {mean_of(overshoots), se_of(overshoots)};
  rep.lorden_bound = reference.m2.value / m;
  rep.renewal_offset.value = m * rep.mean_trial_count - t;
  rep.renewal_offset.standard_error =
      std::sqrt(std::pow(m * count_se, 2) + std::pow(rep.mean_trial_count * m_se, 2));
  rep.limit_offset = reference.r;
  return rep;
}

/// sup_x |Q_hat(X <= x) - Q(X <= x)| for the pooled retained states.
/// One-dimensional states are handled exactly by sorting. In higher
/// dimensions the supremum is taken over a grid made of the retained states
/// themselves (every `stride`-th state, so at most `max_grid` points), which
/// gives a lower approximation of the true supremum.
inline double empirical_ks(const RunLedger& ledger,
                           const std::function<double(std::span<const double>)>& reference_cdf,
                           std::size_t max_grid = 2000) {
  const std::size_t dim = ledger.dimension();
  std::vector<double> pooled;
  for (const auto& trial : ledger.trials()) {
    pooled.insert(pooled.end(), trial.retained.flat().begin(), trial.retained.flat().end());
  }
  const std::size_t count = dim == 0 ? 0 : pooled.size() / dim;
  if (count == 0) throw InsufficientData("empirical_ks: ledger holds no states");
  const double total = static_cast<double>(count);

  if (dim == 1) {
    std::sort(pooled.begin(), pooled.end());
    double sup = 0.0;
    std::size_t i = 0;
    while (i < count) {
      std::size_t j = i;
      while (j < count && pooled[j] == pooled[i]) ++j;
      const double x = pooled[i];
      const double f = reference_cdf(std::span<const double>(&x, 1));
      sup = std::max({sup, static_cast<double>(j) / total - f, f - static_cast<double>(i) / total});
      i = j;
    }
    return sup;
  }

  const std::size_t stride = std::max<std::size_t>(1, (count + max_grid - 1) / max_grid);
  double sup = 0.0;
  for (std::size_t g = 0; g < count; g += stride) {
    const std::span<const double> x(pooled.data() + g * dim, dim);
    std::size_t below = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const double* row = pooled.data() + i * dim;
      bool inside = true;
      for (std::size_t j = 0; j < dim && inside; ++j) inside = row[j] <= x[j];
      if (inside) ++below;
    }
    sup = std::max(sup, std::abs(static_cast<double>(below) / total - reference_cdf(x)));
  }
  return sup;
}

}  // namespace gsplit
