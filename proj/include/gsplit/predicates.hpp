#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <utility>

#include "gsplit/errors.hpp"
#include "gsplit/state.hpp"

namespace gsplit {

/// A measurable set A in state coordinates, used for probability queries.
/// Bounds apply to the leading coordinates; trailing coordinates are free.
class SetPredicate {
 public:
  enum class Kind { OneSidedInterval, Rectangle, Halfspace, Custom };

  /// {x : x_j <= upper_j}.
  static SetPredicate one_sided(State upper) {
    SetPredicate p(Kind::OneSidedInterval);
    p.lower_.assign(upper.size(), -std::numeric_limits<double>::infinity());
    p.upper_ = std::move(upper);
    return p;
  }

  /// {x : lower_j <= x_j <= upper_j}.
  static SetPredicate rectangle(State lower, State upper) {
    if (lower.size() != upper.size()) throw InvalidArgument("rectangle: bound vectors differ in length");
    SetPredicate p(Kind::Rectangle);
    p.lower_ = std::move(lower);
    p.upper_ = std::move(upper);
    return p;
  }

  /// {x : w . x >= c}.
  static SetPredicate halfspace(State normal, double offset) {
    SetPredicate p(Kind::Halfspace);
    p.normal_ = std::move(normal);
    p.offset_ = offset;
    return p;
  }

  static SetPredicate custom(std::function<bool(std::span<const double>)> fn) {
    if (!fn) throw InvalidArgument("custom predicate: empty function");
    SetPredicate p(Kind::Custom);
    p.custom_ = std::move(fn);
    return p;
  }

  /// The whole space.
  static SetPredicate everything() { return rectangle({}, {}); }

  Kind kind() const { return kind_; }
  const State& lower() const { return lower_; }
  const State& upper() const { return upper_; }
  const State& normal() const { return normal_; }
  double offset() const { return offset_; }

  bool contains(std::span<const double> x) const {
    switch (kind_) {
      case Kind::OneSidedInterval:
      case Kind::Rectangle:
        if (lower_.size() > x.size()) throw InvalidArgument("predicate has more bounds than the state");
        for (std::size_t j = 0; j < lower_.size(); ++j) {
          if (!(x[j] >= lower_[j] && x[j] <= upper_[j])) return false;
        }
        return true;
      case Kind::Halfspace: {
        if (normal_.size() > x.size()) throw InvalidArgument("halfspace normal longer than the state");
        double dot = 0.0;
        for (std::size_t j = 0; j < normal_.size(); ++j) dot += normal_[j] * x[j];
        return dot >= offset_;
      }
      case Kind::Custom:
        return custom_(x);
    }
    return false;
  }

  bool operator()(std::span<const double> x) const { return contains(x); }

 private:
  explicit SetPredicate(Kind kind) : kind_(kind) {}

  Kind kind_;
  State lower_;
  State upper_;
  State normal_;
  double offset_ = 0.0;
  std::function<bool(std::span<const double>)> custom_;
};

}  // namespace gsplit
