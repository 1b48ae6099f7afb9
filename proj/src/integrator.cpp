#include "flowmatch/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace flowmatch {

std::string to_string(IntegratorMethod m) {
  return m == IntegratorMethod::rk4_fixed ? "rk4_fixed" : "rk45_adaptive";
}

IntegratorMethod integrator_method_from_string(const std::string& s) {
  if (s == "rk4_fixed") return IntegratorMethod::rk4_fixed;
  if (s == "rk45_adaptive") return IntegratorMethod::rk45_adaptive;
  throw std::invalid_argument("unknown integrator method '" + s + "'");
}

void IntegratorOptions::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  if (!(max_step > 0.0)) throw std::invalid_argument("max_step must be positive");
  if (max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

Vec integrate_rk4(const Rhs& f, Vec y, double t, const IntegratorOptions& opts,
                  IntegrationStats* stats) {
  const auto steps = static_cast<long>(std::ceil(std::abs(t) / opts.max_step - 1e-12));
  if (steps > opts.max_steps) throw IntegrationError("rk4: step count exceeds max_steps");
  const double h = t / static_cast<double>(std::max(1L, steps));
  const Eigen::Index n = y.size();
  Vec k1(n), k2(n), k3(n), k4(n);
  for (long s = 0; s < steps; ++s) {
    f(y, k1);
    f(y + 0.5 * h * k1, k2);
    f(y + 0.5 * h * k2, k3);
    f(y + h * k3, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (stats) stats->accepted += steps;
  return y;
}

Vec integrate_dp45(const Rhs& f, Vec y, double t, const IntegratorOptions& opts,
                   IntegrationStats* stats) {
  const double dir = t >= 0.0 ? 1.0 : -1.0;
  const double T = std::abs(t);
  const Eigen::Index n = y.size();
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ynew(n), err(n);
  f(y, k1);

  // Initial step from the derivative size; the controller corrects it quickly.
  const double scale0 = opts.abs_tol + opts.rel_tol * y.cwiseAbs().maxCoeff();
  const double d1 = k1.cwiseAbs().maxCoeff() / std::max(scale0, 1e-300);
  double h = (d1 > 0.0) ? 0.01 * std::pow(1.0 / d1, 0.2) * std::pow(scale0, 0.2) : T;
  h = std::clamp(h, 1e-6 * std::min(T, opts.max_step), std::min(T, opts.max_step));

  double done = 0.0;
  long steps = 0;
  while (done < T) {
    if (++steps > opts.max_steps) throw IntegrationError("rk45: step count exceeds max_steps");
    bool last = false;
    if (done + h >= T) {
      h = T - done;
      last = true;
    }
    const double hs = dir * h;
    f(y + hs * a21 * k1, k2);
    f(y + hs * (a31 * k1 + a32 * k2), k3);
    f(y + hs * (a41 * k1 + a42 * k2 + a43 * k3), k4);
    f(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
    f(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
    ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(ynew, k7);
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double en = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      en = std::max(en, std::abs(err[i]) / sc);
    }
    if (!std::isfinite(en)) throw IntegrationError("rk45: non-finite error estimate");

    if (en <= 1.0) {
      done = last ? T : done + h;
      y = ynew;
      k1 = k7;
      if (stats) ++stats->accepted;
      const double fac = (en == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h = std::min(h * fac, opts.max_step);
    } else {
      if (stats) ++stats->rejected;
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      if (h < 1e-14 * std::max(1.0, T)) throw IntegrationError("rk45: step size underflow");
    }
  }
  return y;
}

}  // namespace

Vec integrate(const Rhs& f, Vec y0, double t, const IntegratorOptions& opts,
              IntegrationStats* stats) {
  if (!std::isfinite(t)) throw std::invalid_argument("integration time must be finite");
  opts.validate();
  if (t == 0.0) return y0;
  if (opts.method == IntegratorMethod::rk4_fixed) return integrate_rk4(f, std::move(y0), t, opts, stats);
  return integrate_dp45(f, std::move(y0), t, opts, stats);
}

}  // namespace flowmatch
