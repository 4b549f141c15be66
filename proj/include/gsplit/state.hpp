#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gsplit/errors.hpp"

namespace gsplit {

/// A point of the model's state space, in model coordinates.
using State = std::vector<double>;

inline bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

/// Multiset of states stored row-major in one flat array. Duplicates are
/// kept and counted.
class StateList {
 public:
  StateList() = default;
  explicit StateList(std::size_t dimension) : dim_(dimension) {}
  StateList(std::size_t dimension, std::vector<double> rows) : dim_(dimension), data_(std::move(rows)) {
    if (dim_ == 0 ? !data_.empty() : data_.size() % dim_ != 0) {
      throw InvalidArgument("StateList: flat storage is not a whole number of rows");
    }
  }

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const { return data_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  void push_back(std::span<const double> row) {
    if (row.size() != dim_) throw InvalidArgument("StateList: row has wrong dimension");
    data_.insert(data_.end(), row.begin(), row.end());
  }

  void append(const StateList& other) {
    if (other.dim_ != dim_ && !other.empty()) {
      throw InvalidArgument("StateList: appending rows of another dimension");
    }
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  }

  void reserve(std::size_t rows) { data_.reserve(rows * dim_); }
  void clear() { data_.clear(); }

  const std::vector<double>& flat() const { return data_; }

  friend bool operator==(const StateList&, const StateList&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

}  // namespace gsplit
