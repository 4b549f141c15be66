#pragma once

// Primitive samplers used by the level kernels, and the hit-and-run move.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gsplit/errors.hpp"
#include "gsplit/normal.hpp"
#include "gsplit/random.hpp"
#include "gsplit/state.hpp"

namespace gsplit {

namespace detail {

// Intervals whose nearest endpoint is this many standard deviations out are
// handled by rejection instead of inverse-CDF.
inline constexpr double kTailCutoff = 4.0;

inline std::string interval_text(double lo, double hi) {
  std::ostringstream os;
  os.precision(17);
  os << "[" << lo << ", " << hi << "]";
  return os.str();
}

// Standard normal restricted to [a, b] with a >= kTailCutoff (b may be +inf).
inline double standard_tail_draw(double a, double b, RandomStream& rng) {
  const double width = b - a;
  if (width * a < 1.0) {
    // Narrow slab: uniform proposal, acceptance >= exp(-1 - width^2 / 2).
    for (;;) {
      const double z = a + width * rng.uniform();
      if (rng.uniform() <= std::exp(0.5 * (a - z) * (a + z))) return z;
    }
  }
  // Translated exponential proposal with the optimal rate.
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(rng.open_uniform()) / alpha;
    if (z > b) continue;
    const double u = z - alpha;
    if (rng.uniform() <= std::exp(-0.5 * u * u)) return z;
  }
}

inline double standard_truncated_draw(double a, double b, RandomStream& rng) {
  if (a >= kTailCutoff) return standard_tail_draw(a, b, rng);
  if (b <= -kTailCutoff) return -standard_tail_draw(-b, -a, rng);

  // Inverse CDF on whichever side keeps the probabilities away from 1.
  double z;
  if (a > 0.0) {
    const double pa = normal_ccdf(a);
    const double pb = normal_ccdf(b);
    z = normal_upper_quantile(pb + (pa - pb) * rng.open_uniform());
  } else if (b < 0.0) {
    const double pa = normal_cdf(a);
    const double pb = normal_cdf(b);
    z = normal_quantile(pa + (pb - pa) * rng.open_uniform());
  } else {
    const double pa = normal_cdf(a);
    const double pb = normal_cdf(b);
    z = normal_quantile(pa + (pb - pa) * rng.open_uniform());
  }
  return std::clamp(z, a, b);
}

}  // namespace detail

/// Draw from N(mean, stddev^2) conditioned on [lo, hi]. Either end may be
/// infinite. The result always lies in [lo, hi].
inline double truncated_normal_draw(double mean, double stddev, double lo, double hi,
                                    RandomStream& rng) {
  if (!(stddev > 0.0) || !std::isfinite(stddev) || !std::isfinite(mean)) {
    throw InvalidArgument("truncated_normal_draw: need finite mean and stddev > 0");
  }
  if (!(lo < hi)) {
    throw InvalidArgument("truncated_normal_draw: empty interval " +
                          detail::interval_text(lo, hi));
  }
  const double a = (lo - mean) / stddev;
  const double b = (hi - mean) / stddev;
  if (!(a < b) || a == std::numeric_limits<double>::infinity() ||
      b == -std::numeric_limits<double>::infinity()) {
    throw InvalidArgument("truncated_normal_draw: interval " + detail::interval_text(lo, hi) +
                          " has zero probability mass at numeric resolution");
  }
  const double x = mean + stddev * detail::standard_truncated_draw(a, b, rng);
  return std::clamp(x, lo, hi);
}

/// Gamma variate in the shape-rate parameterization: mean = shape / rate.
/// Used for the precision 1/sigma^2 of a normal model.
inline double gamma_precision_draw(double shape, double rate, RandomStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw InvalidArgument("gamma_precision_draw: shape and rate must be positive and finite");
  }
  std::gamma_distribution<double> gamma(shape, 1.0 / rate);
  return gamma(rng.engine());
}

/// Fill `out` with a point uniform on the unit sphere in R^out.size().
inline void unit_sphere_direction(std::span<double> out, RandomStream& rng) {
  for (;;) {
    double norm2 = 0.0;
    for (double& v : out) {
      v = rng.normal();
      norm2 += v * v;
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& v : out) v *= inv;
      return;
    }
  }
}

inline State unit_sphere_direction(std::size_t d, RandomStream& rng) {
  if (d == 0) throw InvalidArgument("unit_sphere_direction: dimension must be >= 1");
  State dir(d);
  unit_sphere_direction(std::span<double>(dir), rng);
  return dir;
}

inline double l1_norm(std::span<const double> x) {
  double sum = 0.0;
  for (double v : x) sum += std::abs(v);
  return sum;
}

struct Interval {
  double lo;
  double hi;
};

namespace detail {

// Largest lambda >= 0 with |beta + lambda*dir|_1 <= gamma, given the
// constraint holds at lambda = 0. g(lambda) is convex piecewise linear, so
// scanning breakpoints in order finds the single crossing.
inline double l1_upper_root(std::span<const double> beta, std::span<const double> dir,
                            double gamma) {
  std::vector<std::pair<double, double>> breaks;  // (lambda, slope jump)
  double slope = 0.0;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    const double bj = beta[j];
    const double dj = dir[j];
    if (dj == 0.0) continue;
    if (bj > 0.0) {
      slope += dj;
    } else if (bj < 0.0) {
      slope -= dj;
    } else {
      slope += std::abs(dj);
    }
    if (bj != 0.0) {
      const double at = -bj / dj;
      if (at > 0.0) breaks.emplace_back(at, 2.0 * std::abs(dj));
    }
  }
  std::sort(breaks.begin(), breaks.end());

  double g = l1_norm(beta) - gamma;
  double lambda = 0.0;
  for (const auto& [at, jump] : breaks) {
    if (slope > 0.0) {
      const double cross = lambda + (-g) / slope;
      if (cross <= at) return cross;
    }
    g += slope * (at - lambda);
    lambda = at;
    slope += jump;
  }
  return lambda + (-g) / slope;
}

}  // namespace detail

/// The set {lambda : |beta + lambda*dir|_1 <= gamma} as [lo, hi], lo <= 0 <= hi.
/// An infinite gamma gives the whole line.
inline Interval l1_feasible_interval(std::span<const double> beta, std::span<const double> dir,
                                     double gamma) {
  if (beta.size() != dir.size()) {
    throw InvalidArgument("l1_feasible_interval: beta and dir differ in length");
  }
  if (std::isinf(gamma) && gamma > 0.0) {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  if (!(l1_norm(beta) <= gamma)) {
    throw InvalidArgument("l1_feasible_interval: starting point violates |beta|_1 <= gamma");
  }
  if (l1_norm(dir) == 0.0) throw InvalidArgument("l1_feasible_interval: zero direction");

  State flipped(dir.begin(), dir.end());
  for (double& v : flipped) v = -v;
  const double hi = detail::l1_upper_root(beta, dir, gamma);
  const double lo = -detail::l1_upper_root(beta, flipped, gamma);
  return {std::min(lo, 0.0), std::max(hi, 0.0)};
}

/// One-dimensional target along a line through the current state: a normal
/// in the step length, truncated to the feasible segment [lo, hi].
struct LineSection {
  std::span<const double> direction;
  double mean;
  double stddev;
  double lo;
  double hi;
};

/// Moves `state` to state + lambda*direction with lambda drawn exactly from
/// the line target. `accept` re-checks the level constraint on the result;
/// a rejected draw (possible only through rounding at the boundary) is
/// redrawn, and after `max_redraws` failures the state is left unchanged.
/// Returns true when the state moved.
template <class Accept>
bool hit_and_run_move(std::span<double> state, const LineSection& line, RandomStream& rng,
                      Accept&& accept, int max_redraws = 64) {
  if (line.direction.size() > state.size()) {
    throw InvalidArgument("hit_and_run_move: direction longer than state");
  }
  if (!(line.lo <= 0.0 && 0.0 <= line.hi)) {
    throw KernelFailure("hit_and_run_move: feasible interval " +
                        detail::interval_text(line.lo, line.hi) +
                        " excludes the current point");
  }
  if (line.lo == line.hi) return false;

  State proposal(state.begin(), state.end());
  for (int attempt = 0; attempt < max_redraws; ++attempt) {
    const double lambda = truncated_normal_draw(line.mean, line.stddev, line.lo, line.hi, rng);
    for (std::size_t j = 0; j < line.direction.size(); ++j) {
      proposal[j] = state[j] + lambda * line.direction[j];
    }
    if (accept(std::span<const double>(proposal))) {
      std::copy(proposal.begin(), proposal.end(), state.begin());
      return true;
    }
  }
  return false;
}

inline State hit_and_run_step(std::span<const double> current, const LineSection& line,
                              RandomStream& rng) {
  State next(current.begin(), current.end());
  hit_and_run_move(std::span<double>(next), line, rng,
                   [](std::span<const double>) { return true; });
  return next;
}

}  // namespace gsplit
