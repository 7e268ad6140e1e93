#include "dycklab/rational.hpp"

namespace dycklab {

Rational parse_rational(const std::string& text) {
  if (text.empty()) throw InputError("parse_rational: empty string");
  Rational r;
  // mpq set_str accepts "num/den" and plain integers; base 10.
  if (r.set_str(text, 10) != 0)
    throw InputError("parse_rational: cannot parse '" + text + "'");
  if (r.get_den() == 0)
    throw InputError("parse_rational: zero denominator in '" + text + "'");
  r.canonicalize();
  return r;
}

double to_double(const Rational& r) { return r.get_d(); }

double FixedPoint::to_double() const {
  Rational r = to_rational();
  return r.get_d();
}

void check_fixed_bits(int bits) {
  if (bits < 2 || bits > 64)
    throw ConfigError("fixed-point bit width must be in [2, 64], got " +
                      std::to_string(bits));
}

mpz_class round_to_even(const Rational& x, int bits) {
  check_fixed_bits(bits);
  // x * 2^bits = p / q with q > 0; round p/q to the nearest integer,
  // ties to the even candidate.
  Rational scaled = x * Rational(mpz_class(1) << bits);
  scaled.canonicalize();
  mpz_class p = scaled.get_num(), q = scaled.get_den();
  mpz_class k, r;
  mpz_fdiv_qr(k.get_mpz_t(), r.get_mpz_t(), p.get_mpz_t(), q.get_mpz_t());
  // r in [0, q); compare 2r with q.
  mpz_class twice = 2 * r;
  if (twice > q) return k + 1;
  if (twice < q) return k;
  return mpz_even_p(k.get_mpz_t()) ? k : k + 1;
}

FixedPoint fixed_from_rational(const Rational& x, int bits) {
  mpz_class n = round_to_even(x, bits);
  mpz_class cap = mpz_class(1) << bits;
  if (n < 0) n = 0;
  if (n > cap) n = cap;
  return FixedPoint{n, bits};
}

}  // namespace dycklab
