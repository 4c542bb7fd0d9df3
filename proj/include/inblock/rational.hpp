#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

namespace inblock {

/// Exact arithmetic for fees, exchange rates, and balances.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "12", "-3", "1.03", or "7/2". Throws Error(BadConfig) otherwise.
Rational parse_rational(std::string_view text);

/// Canonical "num/den" (or "num" when den == 1). Inverse of parse_rational.
std::string to_canonical(const Rational& value);

/// Decimal rendering rounded half-up (away from zero) to `places` digits.
std::string format_decimal(const Rational& value, unsigned places);

/// Rounds to `digits` significant figures, half-up, rendered in plain
/// decimal notation ("0.0019", "1.0").
std::string format_significant(const Rational& value, unsigned digits);

/// Scientific rendering with `digits` significant figures ("1.2885e13").
std::string format_scientific(const Rational& value, unsigned digits);

/// 2^exponent as an exact integer.
BigInt pow2(unsigned exponent);

} // namespace inblock
