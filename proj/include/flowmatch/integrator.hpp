#pragma once

#include "flowmatch/geometry.hpp"

#include <functional>
#include <stdexcept>
#include <string>

namespace flowmatch {

enum class IntegratorMethod { rk4_fixed, rk45_adaptive };

std::string to_string(IntegratorMethod m);
IntegratorMethod integrator_method_from_string(const std::string& s);

struct IntegratorOptions {
  IntegratorMethod method = IntegratorMethod::rk45_adaptive;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double max_step = 0.25;  // rk4_fixed uses exactly this step (last one shortened)
  long max_steps = 200000;

  void validate() const;
  bool operator==(const IntegratorOptions&) const = default;
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Autonomous right-hand side: writes f(y) into dy.  State size is fixed by y0.
using Rhs = std::function<void(const Vec& y, Vec& dy)>;

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
};

// Integrates y' = f(y) from 0 to t (t may be negative).  Dormand-Prince 5(4)
// with FSAL and a standard PI-free controller, or classical RK4.
Vec integrate(const Rhs& f, Vec y0, double t, const IntegratorOptions& opts,
              IntegrationStats* stats = nullptr);

}  // namespace flowmatch
