#pragma once

#include <string>

namespace flowmatch {

enum class BumpKind { exponential, polynomial };

std::string to_string(BumpKind k);
BumpKind bump_kind_from_string(const std::string& s);

struct BumpValue {
  double value;
  double derivative;
};

// Radial cutoff phi on [0, inf): phi(0) = 1, phi'(0) = 0, phi = 0 on [1, inf).
//
//   exponential  exp(1 - 1/(1 - s^2))          C^inf
//   polynomial   1 - (10 s^3 - 15 s^4 + 6 s^5)  C^2, flat to second order at s = 1
class BumpProfile {
 public:
  constexpr explicit BumpProfile(BumpKind kind = BumpKind::exponential) : kind_(kind) {}

  BumpKind kind() const { return kind_; }

  // Throws std::domain_error for s < 0.
  BumpValue eval(double s) const;

  // phi'(s) / s, finite at s = 0; needed for the gradient of phi(|x|/r).
  double derivative_over_s(double s) const;

  // sup_{u in [0,1]} u |phi'(u)|
  double c_phi() const;
  // sup_{u in [0,1]} |phi'(u)|
  double max_slope() const;

  bool operator==(const BumpProfile&) const = default;

 private:
  BumpKind kind_;
};

}  // namespace flowmatch
