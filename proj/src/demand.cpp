#include "stochmatch/demand.hpp"

#include <cctype>
#include <cmath>

namespace stochmatch {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Decimal literal with optional exponent, exactly.
Rational parse_decimal(std::string_view s) {
  const std::string original(s);
  auto fail = [&]() -> Rational {
    throw std::invalid_argument("not a number: '" + original + "'");
  };
  if (s.empty()) return fail();
  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  std::string digits;
  long exponent = 0;
  bool seen_dot = false;
  bool seen_digit = false;
  std::size_t pos = 0;
  for (; pos < s.size(); ++pos) {
    const char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_dot) --exponent;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      break;
    }
  }
  if (!seen_digit) return fail();
  if (pos < s.size()) {
    if (s[pos] != 'e' && s[pos] != 'E') return fail();
    ++pos;
    std::string exp_text(s.substr(pos));
    if (exp_text.empty()) return fail();
    std::size_t used = 0;
    long e = 0;
    try {
      e = std::stol(exp_text, &used);
    } catch (const std::exception&) {
      return fail();
    }
    if (used != exp_text.size()) return fail();
    exponent += e;
  }
  using boost::multiprecision::mpz_int;
  // A leading zero would make the string octal.
  const auto first = digits.find_first_not_of('0');
  mpz_int numerator(first == std::string::npos ? std::string("0") : digits.substr(first));
  mpz_int scale = boost::multiprecision::pow(mpz_int(10), static_cast<unsigned>(std::labs(exponent)));
  Rational value = exponent >= 0 ? Rational(numerator * scale) : Rational(numerator, scale);
  return negative ? Rational(-value) : value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  text = trim(text);
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_decimal(text);
  const Rational num = parse_decimal(trim(text.substr(0, slash)));
  const Rational den = parse_decimal(trim(text.substr(slash + 1)));
  if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
  return num / den;
}

double parse_probability(std::string_view text) { return to_double(parse_rational(text)); }

std::string to_string(const Rational& v) {
  if (boost::multiprecision::denominator(v) == 1) return boost::multiprecision::numerator(v).str();
  return v.str();
}

Distribution truncated_poisson(double rate, double cutoff_mass) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("poisson rate must be positive and finite");
  }
  if (!(cutoff_mass > 0.0 && cutoff_mass < 1.0)) {
    throw std::invalid_argument("poisson cutoff mass must lie in (0, 1)");
  }
  // Recurrence in log space avoids underflow of e^{-rate} for large rates.
  std::vector<double> pmf;
  double log_term = -rate;
  double cumulative = 0.0;
  for (int k = 0;; ++k) {
    if (k > 0) log_term += std::log(rate) - std::log(static_cast<double>(k));
    const double term = std::exp(log_term);
    pmf.push_back(term);
    cumulative += term;
    const double tail = 1.0 - cumulative;
    // Past the mode the remaining tail is at most term * rate / (k + 1 - rate)
    // (geometric bound); use it once 1 - cumulative loses relative precision.
    const bool past_mode = k + 1 > rate;
    const double tail_bound =
        past_mode ? term * rate / (static_cast<double>(k) + 1.0 - rate) : tail;
    if (tail < cutoff_mass || (past_mode && tail_bound < cutoff_mass)) break;
  }
  for (auto& p : pmf) p /= cumulative;
  return Distribution(std::move(pmf));
}

std::vector<double> poisson_binomial(const std::vector<double>& probs) {
  std::vector<double> law{1.0};
  for (const double p : probs) {
    std::vector<double> next(law.size() + 1, 0.0);
    for (std::size_t c = 0; c < law.size(); ++c) {
      next[c] += law[c] * (1.0 - p);
      next[c + 1] += law[c] * p;
    }
    law = std::move(next);
  }
  return law;
}

}  // namespace stochmatch
