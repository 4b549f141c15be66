#pragma once

// Standard normal test model in R^d with importance function S(x) = x_1.
// Every level density is a truncated normal in the first coordinate times
// independent normals, so probabilities have closed forms.

#include <cmath>
#include <limits>
#include <optional>
#include <span>

#include "gsplit/errors.hpp"
#include "gsplit/kernels.hpp"
#include "gsplit/model.hpp"
#include "gsplit/normal.hpp"
#include "gsplit/predicates.hpp"
#include "gsplit/random.hpp"

namespace gsplit {

enum class ToyKernel {
  Exact,      // independent draw from the level density
  HitAndRun,  // random direction, exact truncated-normal step along it
};

inline ToyKernel parse_toy_kernel(const std::string& text) {
  if (text == "exact") return ToyKernel::Exact;
  if (text == "hit-and-run" || text == "hit_and_run") return ToyKernel::HitAndRun;
  throw InvalidArgument("unknown toy kernel '" + text + "'");
}

class ToyNormalModel {
 public:
  explicit ToyNormalModel(std::size_t dimension = 1, ToyKernel kernel = ToyKernel::Exact)
      : dim_(dimension), kernel_(kernel) {
    if (dim_ == 0) throw InvalidArgument("ToyNormalModel: dimension must be >= 1");
  }

  std::size_t dimension() const { return dim_; }
  ToyKernel kernel() const { return kernel_; }

  void sample_f(RandomStream& rng, std::span<double> x) const {
    for (double& v : x) v = rng.normal();
  }

  double importance(std::span<const double> x) const { return x[0]; }

  void kernel_step(const LevelConstraint& level, std::span<double> x, RandomStream& rng) const {
    const double inf = std::numeric_limits<double>::infinity();
    if (kernel_ == ToyKernel::Exact) {
      const bool up = level.direction == Direction::AtLeast;
      x[0] = truncated_normal_draw(0.0, 1.0, up ? level.threshold : -inf, up ? inf : level.threshold, rng);
      for (std::size_t j = 1; j < x.size(); ++j) x[j] = rng.normal();
      return;
    }
    State dir = unit_sphere_direction(dim_, rng);
    double proj = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) proj += x[j] * dir[j];
    // Feasible step lengths keep x_1 + lambda*d_1 on the admitted side.
    double lo = -inf;
    double hi = inf;
    if (dir[0] != 0.0) {
      const double edge = (level.threshold - x[0]) / dir[0];
      const bool lower_edge = (dir[0] > 0.0) == (level.direction == Direction::AtLeast);
      if (lower_edge) {
        lo = std::min(edge, 0.0);
      } else {
        hi = std::max(edge, 0.0);
      }
    }
    const LineSection line{std::span<const double>(dir), -proj, 1.0, lo, hi};
    hit_and_run_move(x, line, rng, [&](std::span<const double> y) { return level.admits(y[0]); });
  }

  /// P(X in A, S(X) on the admitted side of `event`) under f, for boxes and
  /// one-sided intervals. Other predicate kinds have no closed form here.
  std::optional<double> joint_probability(const SetPredicate& set, const LevelConstraint& event) const {
    using Kind = SetPredicate::Kind;
    if (set.kind() != Kind::OneSidedInterval && set.kind() != Kind::Rectangle) return std::nullopt;
    const double inf = std::numeric_limits<double>::infinity();
    double lo0 = event.direction == Direction::AtLeast ? event.threshold : -inf;
    double hi0 = event.direction == Direction::AtLeast ? inf : event.threshold;
    double prob = 1.0;
    const std::size_t bounded = set.lower().size();
    if (bounded > dim_) throw InvalidArgument("predicate has more bounds than the model dimension");
    for (std::size_t j = 0; j < bounded; ++j) {
      double lo = set.lower()[j];
      double hi = set.upper()[j];
      if (j == 0) {
        lo = std::max(lo, lo0);
        hi = std::min(hi, hi0);
      }
      prob *= interval_mass(lo, hi);
    }
    if (bounded == 0) prob = interval_mass(lo0, hi0);
    return prob;
  }

  /// Q(X <= x) for the target conditioned on `event`.
  double conditional_cdf(std::span<const double> x, const LevelConstraint& event) const {
    const double denom = *joint_probability(SetPredicate::everything(), event);
    const double num = *joint_probability(SetPredicate::one_sided(State(x.begin(), x.end())), event);
    return num / denom;
  }

 private:
  static double interval_mass(double lo, double hi) {
    if (!(lo < hi)) return 0.0;
    // Subtract on the side where the tail values are small.
    if (lo >= 0.0) return normal_ccdf(lo) - normal_ccdf(hi);
    return normal_cdf(hi) - normal_cdf(lo);
  }

  std::size_t dim_;
  ToyKernel kernel_;
};

static_assert(SplittingModel<ToyNormalModel>);

}  // namespace gsplit
