// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "adasgd/errors.hpp"

namespace adasgd {

/// Dense parameter vector. The dimension is fixed at construction and every
/// arithmetic helper rejects operands of a different dimension.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}
  explicit ParamVector(std::span<const double> values)
      : values_(values.begin(), values.end()) {}

  std::size_t dim() const noexcept { return values_.size(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  void fill(double v) {
    for (auto& x : values_) x = v;
  }

  /// this += alpha * other
  ParamVector& axpy(double alpha, const ParamVector& other) {
    require_same_dim(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += alpha * other.values_[i];
    return *this;
  }

  ParamVector& operator+=(const ParamVector& other) { return axpy(1.0, other); }
  ParamVector& operator-=(const ParamVector& other) { return axpy(-1.0, other); }
  ParamVector& operator*=(double s) {
    for (auto& x : values_) x *= s;
    return *this;
  }

  double dot(const ParamVector& other) const {
    require_same_dim(other);
    double acc = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) acc += values_[i] * other.values_[i];
    return acc;
  }

  double squared_norm() const { return dot(*this); }
  double norm() const { return std::sqrt(squared_norm()); }

  bool all_finite() const {
    for (double x : values_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  void require_same_dim(const ParamVector& other) const {
    if (other.dim() != dim())
      throw PreconditionError("dimension mismatch: " + std::to_string(dim()) + " vs " +
                              std::to_string(other.dim()));
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

inline ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
inline ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
inline ParamVector operator*(double s, ParamVector a) { return a *= s; }
inline ParamVector operator*(ParamVector a, double s) { return a *= s; }

}  // namespace adasgd
