#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "timetile/error.hpp"

namespace timetile {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) {
    throw OverflowError("integer overflow in " + std::to_string(a) + " + " + std::to_string(b));
  }
  return r;
}

inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) {
    throw OverflowError("integer overflow in " + std::to_string(a) + " - " + std::to_string(b));
  }
  return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw OverflowError("integer overflow in " + std::to_string(a) + " * " + std::to_string(b));
  }
  return r;
}

inline std::int64_t checked_neg(std::int64_t a) { return checked_sub(0, a); }

/// Integer division rounding toward negative infinity.
inline std::int64_t floord(std::int64_t a, std::int64_t b) {
  if (b == 0) throw InvalidArgument("floord: division by zero");
  if (b == -1) return checked_neg(a);
  std::int64_t q = a / b;
  if (a % b != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Integer division rounding toward positive infinity.
inline std::int64_t ceild(std::int64_t a, std::int64_t b) {
  if (b == 0) throw InvalidArgument("ceild: division by zero");
  if (b == -1) return checked_neg(a);
  std::int64_t q = a / b;
  if (a % b != 0 && ((a < 0) == (b < 0))) ++q;
  return q;
}

// Result in [0, b) for b > 0.
inline std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  return checked_sub(a, checked_mul(b, floord(a, b)));
}

inline std::int64_t abs_gcd(std::int64_t a, std::int64_t b) {
  if (a == INT64_MIN || b == INT64_MIN) throw OverflowError("gcd of INT64_MIN");
  return std::gcd(a < 0 ? -a : a, b < 0 ? -b : b);
}

}  // namespace timetile
