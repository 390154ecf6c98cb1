#pragma once

#include <cmath>
#include <limits>
#include <string>

namespace nlf {

/// A value in R ∪ {+∞}. Arithmetic saturates at +∞ and never produces NaN:
/// 0·∞ is taken as 0 (the measure-theoretic convention), and subtracting from
/// +∞ keeps +∞.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)

  static constexpr ExtReal infinity() { return ExtReal(std::numeric_limits<double>::infinity()); }

  bool is_infinite() const { return std::isinf(value_); }
  bool is_finite() const { return !is_infinite(); }
  double value() const { return value_; }

  friend ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.is_infinite() || b.is_infinite()) return infinity();
    return ExtReal(a.value_ + b.value_);
  }
  friend ExtReal operator*(ExtReal a, ExtReal b) {
    if (a.value_ == 0.0 || b.value_ == 0.0) return ExtReal(0.0);
    if (a.is_infinite() || b.is_infinite()) return infinity();
    return ExtReal(a.value_ * b.value_);
  }
  friend bool operator==(ExtReal a, ExtReal b) { return a.value_ == b.value_; }
  friend bool operator<(ExtReal a, ExtReal b) { return a.value_ < b.value_; }
  friend bool operator<=(ExtReal a, ExtReal b) { return a.value_ <= b.value_; }

  std::string to_string() const;

 private:
  double value_ = 0.0;
};

}  // namespace nlf
