#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochmatch/numeric.hpp"

namespace stochmatch {

/// Finite-support law of a nonnegative integer demand.
///
/// The pmf is stored densely over {0, ..., max_support}; trailing zero
/// entries are trimmed on construction so max_support() is always the largest
/// value with positive probability.
template <class Scalar>
class DemandDistribution {
 public:
  DemandDistribution() : pmf_{Scalar(1)} {}

  /// Throws std::invalid_argument unless the entries are nonnegative and sum
  /// to one (exactly for rationals, within 1e-12 for doubles).
  explicit DemandDistribution(std::vector<Scalar> pmf) : pmf_(std::move(pmf)) {
    while (!pmf_.empty() && pmf_.back() == Scalar(0)) pmf_.pop_back();
    if (pmf_.empty()) throw std::invalid_argument("demand pmf has no positive mass");
    Scalar total(0);
    for (std::size_t v = 0; v < pmf_.size(); ++v) {
      if (pmf_[v] < Scalar(0)) {
        throw std::invalid_argument("demand pmf has a negative entry at value " +
                                    std::to_string(v));
      }
      total += pmf_[v];
    }
    if (abs_value(Scalar(total - Scalar(1))) > ScalarTraits<Scalar>::pmf_tolerance()) {
      throw std::invalid_argument("demand pmf sums to " + std::to_string(to_double(total)) +
                                  ", expected 1");
    }
  }

  static DemandDistribution from_map(const std::map<int, Scalar>& entries) {
    int top = 0;
    for (const auto& [value, p] : entries) {
      if (value < 0) throw std::invalid_argument("demand values must be nonnegative");
      top = std::max(top, value);
    }
    std::vector<Scalar> pmf(static_cast<std::size_t>(top) + 1, Scalar(0));
    for (const auto& [value, p] : entries) pmf[static_cast<std::size_t>(value)] += p;
    return DemandDistribution(std::move(pmf));
  }

  static DemandDistribution point_mass(int value) {
    std::vector<Scalar> pmf(static_cast<std::size_t>(value) + 1, Scalar(0));
    pmf.back() = Scalar(1);
    return DemandDistribution(std::move(pmf));
  }

  int max_support() const { return static_cast<int>(pmf_.size()) - 1; }

  Scalar pmf(int value) const {
    if (value < 0 || value > max_support()) return Scalar(0);
    return pmf_[static_cast<std::size_t>(value)];
  }

  const std::vector<Scalar>& pmf_vector() const { return pmf_; }

  /// Pr[D >= ell]; zero beyond the support.
  Scalar survival(int ell) const {
    if (ell <= 0) return Scalar(1);
    Scalar tail(0);
    for (int v = ell; v <= max_support(); ++v) tail += pmf_[static_cast<std::size_t>(v)];
    return tail;
  }

  /// (Pr[D >= 1], ..., Pr[D >= length]), zero-padded past the support.
  std::vector<Scalar> survival_vector(int length) const {
    std::vector<Scalar> out(static_cast<std::size_t>(std::max(length, 0)), Scalar(0));
    Scalar tail(0);
    for (int v = max_support(); v >= 1; --v) {
      tail += pmf_[static_cast<std::size_t>(v)];
      if (v <= length) out[static_cast<std::size_t>(v - 1)] = tail;
    }
    return out;
  }

  /// E[min(D, cap)] as the sum of survival(1..cap).
  Scalar truncated_expectation(int cap) const {
    Scalar total(0);
    for (const auto& s : survival_vector(std::min(cap, max_support()))) total += s;
    return total;
  }

  Scalar mean() const { return truncated_expectation(max_support()); }

  template <class Other>
  DemandDistribution<Other> cast() const {
    std::vector<Other> out;
    out.reserve(pmf_.size());
    for (const auto& p : pmf_) {
      if constexpr (std::is_same_v<Other, double>) {
        out.push_back(to_double(p));
      } else {
        out.push_back(Other(p));
      }
    }
    return DemandDistribution<Other>(std::move(out));
  }

 private:
  std::vector<Scalar> pmf_;
};

using Distribution = DemandDistribution<double>;

/// Poisson(rate) truncated at the smallest L whose upper tail Pr[X > L] is
/// below `cutoff_mass`, then renormalized.
Distribution truncated_poisson(double rate, double cutoff_mass);

/// Law of the sum of independent Bernoulli(p_t) trials, t = 1..probs.size().
std::vector<double> poisson_binomial(const std::vector<double>& probs);

}  // namespace stochmatch
