#pragma once

#include <cassert>
#include <cmath>
#include <limits>
#include <string>

namespace pretrends {

/// A real number or one of the two infinities, kept as an explicit tag so
/// that finite arithmetic never silently absorbs an infinite endpoint.
class ExtendedReal {
 public:
  enum class Kind { NegInf, Finite, PosInf };

  constexpr ExtendedReal() = default;

  static constexpr ExtendedReal finite(double v) { return ExtendedReal(Kind::Finite, v); }
  static constexpr ExtendedReal neg_inf() { return ExtendedReal(Kind::NegInf, 0.0); }
  static constexpr ExtendedReal pos_inf() { return ExtendedReal(Kind::PosInf, 0.0); }

  /// Maps IEEE infinities onto the sentinels; NaN is not representable.
  static ExtendedReal from_double(double v) {
    assert(!std::isnan(v));
    if (std::isinf(v)) return v > 0 ? pos_inf() : neg_inf();
    return finite(v);
  }

  constexpr Kind kind() const { return kind_; }
  constexpr bool is_finite() const { return kind_ == Kind::Finite; }
  constexpr bool is_neg_inf() const { return kind_ == Kind::NegInf; }
  constexpr bool is_pos_inf() const { return kind_ == Kind::PosInf; }

  /// Only meaningful for finite values.
  constexpr double value() const { return value_; }

  double to_double() const {
    switch (kind_) {
      case Kind::NegInf: return -std::numeric_limits<double>::infinity();
      case Kind::PosInf: return std::numeric_limits<double>::infinity();
      case Kind::Finite: break;
    }
    return value_;
  }

  friend constexpr bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return a.kind_ == b.kind_ && (a.kind_ != Kind::Finite || a.value_ == b.value_);
  }

  friend constexpr bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.kind_ != b.kind_) return static_cast<int>(a.kind_) < static_cast<int>(b.kind_);
    return a.kind_ == Kind::Finite && a.value_ < b.value_;
  }
  friend constexpr bool operator<=(const ExtendedReal& a, const ExtendedReal& b) { return !(b < a); }

  /// Comparisons against plain finite reals.
  friend constexpr bool operator<=(const ExtendedReal& a, double x) {
    return a.kind_ == Kind::NegInf || (a.kind_ == Kind::Finite && a.value_ <= x);
  }
  friend constexpr bool operator<=(double x, const ExtendedReal& a) {
    return a.kind_ == Kind::PosInf || (a.kind_ == Kind::Finite && x <= a.value_);
  }

 private:
  constexpr ExtendedReal(Kind k, double v) : kind_(k), value_(v) {}

  Kind kind_ = Kind::Finite;
  double value_ = 0.0;
};

/// "inf", "-inf" or the shortest round-tripping decimal.
std::string to_string(const ExtendedReal& x);

}  // namespace pretrends
