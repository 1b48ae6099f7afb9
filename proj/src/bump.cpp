#include "flowmatch/bump.hpp"

#include <cmath>
#include <stdexcept>

namespace flowmatch {

std::string to_string(BumpKind k) {
  return k == BumpKind::exponential ? "exponential" : "polynomial";
}

BumpKind bump_kind_from_string(const std::string& s) {
  if (s == "exponential") return BumpKind::exponential;
  if (s == "polynomial") return BumpKind::polynomial;
  throw std::invalid_argument("unknown bump profile '" + s + "'");
}

BumpValue BumpProfile::eval(double s) const {
  if (!(s >= 0.0)) throw std::domain_error("bump argument must be nonnegative");
  if (s >= 1.0) return {0.0, 0.0};
  if (kind_ == BumpKind::exponential) {
    const double w = 1.0 - s * s;
    const double v = std::exp(1.0 - 1.0 / w);
    return {v, -2.0 * s / (w * w) * v};
  }
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double value = 1.0 - s3 * (10.0 - 15.0 * s + 6.0 * s2);
  const double om = 1.0 - s;
  return {value, -30.0 * s2 * om * om};
}

double BumpProfile::derivative_over_s(double s) const {
  if (!(s >= 0.0)) throw std::domain_error("bump argument must be nonnegative");
  if (s >= 1.0) return 0.0;
  if (kind_ == BumpKind::exponential) {
    const double w = 1.0 - s * s;
    return -2.0 / (w * w) * std::exp(1.0 - 1.0 / w);
  }
  const double om = 1.0 - s;
  return -30.0 * s * om * om;
}

double BumpProfile::c_phi() const {
  if (kind_ == BumpKind::exponential) {
    // u|phi'(u)| = 2(v^2 - v) e^{1 - v} with v = 1/(1 - u^2); maximal at v^2 - 3v + 1 = 0.
    const double v = (3.0 + std::sqrt(5.0)) / 2.0;
    return 2.0 * (v * v - v) * std::exp(1.0 - v);
  }
  // 30 u^3 (1-u)^2 peaks at u = 3/5.
  return 30.0 * 0.216 * 0.16;
}

double BumpProfile::max_slope() const {
  if (kind_ == BumpKind::exponential) {
    // |phi'| peaks where 3 u^4 = 1.
    const double w = 1.0 / std::sqrt(3.0);
    const double s = std::sqrt(w);
    const double om = 1.0 - w;
    return 2.0 * s / (om * om) * std::exp(1.0 - 1.0 / om);
  }
  // 30 u^2 (1-u)^2 peaks at u = 1/2.
  return 30.0 / 16.0;
}

}  // namespace flowmatch
