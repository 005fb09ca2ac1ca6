#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace uscx {

/**
 * A point of the extended real line: a finite double, +infinity, or
 * -infinity.  The three states are encoded through the IEEE values with the
 * class invariant that the payload is never NaN, so every comparison is
 * total.  Arithmetic is restricted to the operations that are well defined
 * on all three states (max/min, positive scaling, finite shifts).
 */
class ExtReal {
 public:
  ExtReal() : v_(0.0) {}

  // Accepts finite values and +-infinity; NaN violates the invariant.
  ExtReal(double v) : v_(v) {
    if (std::isnan(v)) {
      throw std::invalid_argument("ExtReal: NaN is not an extended real");
    }
  }

  static ExtReal pos_inf() { return ExtReal(std::numeric_limits<double>::infinity()); }
  static ExtReal neg_inf() { return ExtReal(-std::numeric_limits<double>::infinity()); }

  bool is_finite() const { return std::isfinite(v_); }
  bool is_pos_inf() const { return std::isinf(v_) && v_ > 0; }
  bool is_neg_inf() const { return std::isinf(v_) && v_ < 0; }

  // Raw payload; finite exactly when is_finite().
  double raw() const { return v_; }

  // Finite payload; callers must have checked is_finite().
  double finite() const {
    if (!is_finite()) throw std::logic_error("ExtReal: finite() on an infinite value");
    return v_;
  }

  friend bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }
  friend bool operator!=(ExtReal a, ExtReal b) { return a.v_ != b.v_; }
  friend bool operator<(ExtReal a, ExtReal b) { return a.v_ < b.v_; }
  friend bool operator<=(ExtReal a, ExtReal b) { return a.v_ <= b.v_; }
  friend bool operator>(ExtReal a, ExtReal b) { return a.v_ > b.v_; }
  friend bool operator>=(ExtReal a, ExtReal b) { return a.v_ >= b.v_; }

 private:
  double v_;
};

inline ExtReal max(ExtReal a, ExtReal b) { return a < b ? b : a; }
inline ExtReal min(ExtReal a, ExtReal b) { return b < a ? b : a; }

// x + b for finite b; infinities absorb the shift.
inline ExtReal shift(ExtReal x, double b) {
  if (!std::isfinite(b)) throw std::invalid_argument("ExtReal shift: offset must be finite");
  if (!x.is_finite()) return x;
  return ExtReal(x.raw() + b);
}

// a * x for finite a > 0; infinities keep their sign.
inline ExtReal scale(ExtReal x, double a) {
  if (!(std::isfinite(a) && a > 0)) {
    throw std::invalid_argument("ExtReal scale: factor must be finite and positive");
  }
  if (!x.is_finite()) return x;
  return ExtReal(a * x.raw());
}

/** Serialize as a decimal literal, "+inf", or "-inf" (round-trip exact). */
std::string to_token(ExtReal x);

/** Parse the representation produced by to_token. */
ExtReal extreal_from_token(const std::string& token);

}  // namespace uscx
