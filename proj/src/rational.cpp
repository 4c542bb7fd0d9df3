#include "inblock/rational.hpp"

#include "inblock/errors.hpp"

#include <cctype>

namespace inblock {

namespace {

using boost::multiprecision::denominator;
using boost::multiprecision::numerator;

// cpp_int reads a leading 0 as an octal prefix, so feed it plain decimal.
BigInt decimal(std::string_view digits) {
  auto first = digits.find_first_not_of('0');
  return first == std::string_view::npos ? BigInt(0) : BigInt(std::string(digits.substr(first)));
}

bool all_digits(std::string_view s) {
  if (s.empty())
    return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      return false;
  return true;
}

BigInt pow10(unsigned e) {
  BigInt r = 1;
  for (unsigned i = 0; i < e; ++i)
    r *= 10;
  return r;
}

Rational pow10r(int e) {
  return e >= 0 ? Rational(pow10(static_cast<unsigned>(e)))
                : Rational(BigInt(1), pow10(static_cast<unsigned>(-e)));
}

// Rounds a non-negative rational half-up to an integer.
BigInt round_half_up(const Rational& v) {
  BigInt num = numerator(v);
  BigInt den = denominator(v);
  return (2 * num + den) / (2 * den);
}

// floor(log10(v)) for v > 0.
int decimal_exponent(const Rational& v) {
  int e = static_cast<int>(numerator(v).str().size())
          - static_cast<int>(denominator(v).str().size());
  while (pow10r(e) > v)
    --e;
  while (pow10r(e + 1) <= v)
    ++e;
  return e;
}

// Renders the integer `digits` scaled by 10^-places.
std::string place_point(const BigInt& digits, int places) {
  std::string s = digits.str();
  if (places <= 0)
    return s + std::string(static_cast<size_t>(-places), '0');
  auto p = static_cast<size_t>(places);
  if (s.size() <= p)
    s.insert(0, p + 1 - s.size(), '0');
  s.insert(s.size() - p, ".");
  return s;
}

struct Significand {
  BigInt digits;
  int exponent;
};

Significand significand(const Rational& v, unsigned digits) {
  int e = decimal_exponent(v);
  int shift = static_cast<int>(digits) - 1 - e;
  BigInt n = round_half_up(v * pow10r(shift));
  if (n == pow10(digits)) {
    n /= 10;
    ++e;
  }
  return {n, e};
}

} // namespace

Rational parse_rational(std::string_view text) {
  std::string_view s = text;
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  Rational result;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = s.substr(0, slash);
    auto den = s.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den))
      throw Error(errc::BadConfig, "not a rational: " + std::string(text));
    BigInt d = decimal(den);
    if (d == 0)
      throw Error(errc::BadConfig, "zero denominator: " + std::string(text));
    result = Rational(decimal(num), d);
  } else {
    auto dot = s.find('.');
    auto whole = s.substr(0, dot);
    std::string_view frac =
      dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    if (!all_digits(whole) || (dot != std::string_view::npos && !all_digits(frac)))
      throw Error(errc::BadConfig, "not a decimal: " + std::string(text));
    BigInt scaled = decimal(std::string(whole) + std::string(frac));
    result = Rational(scaled, pow10(static_cast<unsigned>(frac.size())));
  }
  return negative ? Rational(-result) : result;
}

std::string to_canonical(const Rational& value) {
  if (denominator(value) == 1)
    return numerator(value).str();
  return numerator(value).str() + "/" + denominator(value).str();
}

std::string format_decimal(const Rational& value, unsigned places) {
  bool negative = value < 0;
  Rational mag = negative ? Rational(-value) : value;
  BigInt n = round_half_up(mag * pow10r(static_cast<int>(places)));
  std::string s = place_point(n, static_cast<int>(places));
  return (negative && n != 0) ? "-" + s : s;
}

std::string format_significant(const Rational& value, unsigned digits) {
  if (value == 0)
    return "0";
  bool negative = value < 0;
  Rational mag = negative ? Rational(-value) : value;
  auto [n, e] = significand(mag, digits);
  std::string s = place_point(n, static_cast<int>(digits) - 1 - e);
  return negative ? "-" + s : s;
}

std::string format_scientific(const Rational& value, unsigned digits) {
  if (value == 0)
    return "0";
  bool negative = value < 0;
  Rational mag = negative ? Rational(-value) : value;
  auto [n, e] = significand(mag, digits);
  std::string s = place_point(n, static_cast<int>(digits) - 1) + "e" + std::to_string(e);
  return negative ? "-" + s : s;
}

BigInt pow2(unsigned exponent) {
  BigInt r = 1;
  r <<= exponent;
  return r;
}

} // namespace inblock
