#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

#include "dycklab/errors.hpp"

namespace dycklab {

// Exact arithmetic for the stack encodings and the compiled network weights.
// mpq_class already gives canonical form (gcd-reduced, positive denominator),
// so Rational is a thin alias plus a few helpers with the conventions used
// throughout: parse/format as "num/den", or just "num" when den == 1.
using Rational = mpq_class;

inline Rational rational(long num, long den = 1) {
  if (den == 0) throw InputError("rational: zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline std::string to_string(const Rational& r) { return r.get_str(); }

Rational parse_rational(const std::string& text);

double to_double(const Rational& r);

// --- fixed-point values -----------------------------------------------------
//
// A b-bit fixed-point number on [0, 1]: value = num / 2^b with integer num in
// [0, 2^b]. Every affine operation is computed exactly in rationals, rounded
// to the nearest grid point (ties to even), then saturated into [0, 1].

struct FixedPoint {
  mpz_class num;
  int bits = 0;

  Rational to_rational() const {
    Rational r(num, mpz_class(1) << bits);
    r.canonicalize();
    return r;
  }
  double to_double() const;
  bool operator==(const FixedPoint& o) const {
    return bits == o.bits && num == o.num;
  }
};

// Round x to the 2^-bits grid (ties to even) and clamp to [0, 1].
FixedPoint fixed_from_rational(const Rational& x, int bits);

// Grid rounding without the clamp; used by tests to probe the rounding rule.
mpz_class round_to_even(const Rational& x, int bits);

void check_fixed_bits(int bits);

}  // namespace dycklab
