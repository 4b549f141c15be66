#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gsplit/errors.hpp"
#include "gsplit/random.hpp"

namespace gsplit {

/// Which side of the levels the rare event lies on. AtMost events such as
/// {|beta|_1 <= gamma} are handled by negating scores and levels, so the
/// rest of the code only ever tests "canonical score >= canonical level".
enum class Direction { AtLeast, AtMost };

inline const char* to_string(Direction d) { return d == Direction::AtLeast ? "at_least" : "at_most"; }

inline Direction parse_direction(const std::string& text) {
  if (text == "at_least" || text == "at-least" || text == ">=") return Direction::AtLeast;
  if (text == "at_most" || text == "at-most" || text == "<=") return Direction::AtMost;
  throw InvalidArgument("unknown event direction '" + text + "'");
}

inline double canonical_value(double raw, Direction d) { return d == Direction::AtLeast ? raw : -raw; }

/// The support of one level: {x : S(x) >= threshold} or {x : S(x) <= threshold}.
struct LevelConstraint {
  double threshold;
  Direction direction;

  bool admits(double score) const {
    return canonical_value(score, direction) >= canonical_value(threshold, direction);
  }
};

class LevelSchedule {
 public:
  LevelSchedule(std::vector<double> levels, int split_factor, Direction direction = Direction::AtLeast)
      : levels_(std::move(levels)), split_(split_factor), direction_(direction) {
    if (levels_.empty()) throw InvalidArgument("LevelSchedule: need at least one level");
    if (split_ < 2) throw InvalidArgument("LevelSchedule: splitting factor must be >= 2");
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      if (std::isnan(levels_[l])) throw InvalidArgument("LevelSchedule: NaN level");
      if (l > 0 && !(canonical_level(l) > canonical_level(l - 1))) {
        throw InvalidArgument(std::string("LevelSchedule: levels must be strictly ") +
                              (direction_ == Direction::AtLeast ? "increasing" : "decreasing"));
      }
    }
  }

  std::size_t depth() const { return levels_.size(); }
  int split_factor() const { return split_; }
  Direction direction() const { return direction_; }
  const std::vector<double>& levels() const { return levels_; }

  double level(std::size_t l) const { return levels_.at(l); }
  double final_level() const { return levels_.back(); }
  double canonical_level(std::size_t l) const { return canonical_value(levels_.at(l), direction_); }

  LevelConstraint constraint(std::size_t l) const { return {levels_.at(l), direction_}; }

  /// True if a state with importance `score` has reached level l (0-based).
  bool reaches(double score, std::size_t l) const {
    return canonical_value(score, direction_) >= canonical_level(l);
  }

  /// s^(tau-1), the normaliser of the unbiased estimators.
  double branching_scale() const {
    return std::pow(static_cast<double>(split_), static_cast<double>(depth() - 1));
  }

  friend bool operator==(const LevelSchedule&, const LevelSchedule&) = default;

 private:
  std::vector<double> levels_;
  int split_;
  Direction direction_;
};

/// What the splitting sampler needs from a model:
///   sample_f      exact draw from the base density f
///   importance    the importance function S
///   kernel_step   one transition of a kernel stationary for f restricted
///                 to the given level constraint; updates the state in place
template <class M>
concept SplittingModel = requires(const M& model, std::span<double> x, std::span<const double> cx,
                                  RandomStream& rng, const LevelConstraint& level) {
  { model.dimension() } -> std::convertible_to<std::size_t>;
  model.sample_f(rng, x);
  { model.importance(cx) } -> std::convertible_to<double>;
  model.kernel_step(level, x, rng);
};

/// Type-erased model, for custom models assembled from callables.
struct CallbackModel {
  std::size_t dim = 0;
  std::function<void(RandomStream&, std::span<double>)> sample;
  std::function<double(std::span<const double>)> score;
  std::function<void(const LevelConstraint&, std::span<double>, RandomStream&)> kernel;

  std::size_t dimension() const { return dim; }
  void sample_f(RandomStream& rng, std::span<double> x) const { sample(rng, x); }
  double importance(std::span<const double> x) const { return score(x); }
  void kernel_step(const LevelConstraint& level, std::span<double> x, RandomStream& rng) const {
    kernel(level, x, rng);
  }
};

static_assert(SplittingModel<CallbackModel>);

}  // namespace gsplit
