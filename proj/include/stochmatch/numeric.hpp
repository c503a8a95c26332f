#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/gmp.hpp>

namespace stochmatch {

/// Exact rational scalar. Expression templates are off so the type composes
/// with Eigen and with plain `auto` locals.
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;

/// Per-scalar tolerances. Rationals compare exactly.
template <class Scalar>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool kExact = false;
  static double pmf_tolerance() { return 1e-12; }
  static double lp_tolerance() { return 1e-9; }
  static double pivot_tolerance() { return 1e-11; }
  static double to_double(double v) { return v; }
};

template <>
struct ScalarTraits<Rational> {
  static constexpr bool kExact = true;
  static Rational pmf_tolerance() { return Rational(0); }
  static Rational lp_tolerance() { return Rational(0); }
  static Rational pivot_tolerance() { return Rational(0); }
  static double to_double(const Rational& v) { return v.convert_to<double>(); }
};

template <class Scalar>
double to_double(const Scalar& v) {
  return ScalarTraits<Scalar>::to_double(v);
}

template <class Scalar>
Scalar abs_value(const Scalar& v) {
  return v < Scalar(0) ? Scalar(-v) : v;
}

/// Parses "3/4", "0.25", "1e-3", "2" into an exact rational.
Rational parse_rational(std::string_view text);

/// Decimal or fraction text to double ("3/4" -> 0.75).
double parse_probability(std::string_view text);

/// "5/12", "0", "3".
std::string to_string(const Rational& v);

template <class Scalar>
Scalar from_rational(const Rational& v) {
  if constexpr (std::is_same_v<Scalar, Rational>) {
    return v;
  } else {
    return v.convert_to<double>();
  }
}

}  // namespace stochmatch
