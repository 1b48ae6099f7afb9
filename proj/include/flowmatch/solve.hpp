#pragma once

#include "flowmatch/flow.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace flowmatch {

struct SolveOptions {
  double radius_factor = 0.25;
  double step_factor = 0.25;
  double newton_tol = 1e-9;
  int max_newton_iters = 25;
  double fd_step = 1e-6;
  std::optional<double> separation_floor;  // default: min(sep(x), sep(y)) / 2
  int max_path_retries = 8;
  double max_radius = 0.5;
  double max_stage_time = 4.0;
  int max_bisections = 12;
  BumpProfile profile{};
  IntegratorOptions integrator{};
  std::uint64_t seed = 1;

  void validate() const;
  FamilyOptions family() const;
};

class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Newton did not converge (or asked for |t| > max_stage_time); callers shrink
// the step and retry.
class StepFailure : public SolveError {
 public:
  using SolveError::SolveError;
};

class PlannerError : public SolveError {
 public:
  using SolveError::SolveError;
};

struct StepReport {
  int iterations = 0;
  double residual = 0;
  double condition = 1;
  bool converged = false;
};

struct StepResult {
  DiffeoProgram program;   // N-stage program, zero-time stages dropped
  Configuration reached;   // apply_config(program, current)
  StepReport report;
};

struct JacobianAtZero {
  Mat matrix;           // N x N, entry ((i,j), k) = <X_k(x_i), Y_ij>
  double condition = 1;  // 2-norm condition number
  bool invertible = false;
};

JacobianAtZero jacobian_at_zero(const FieldFamily& family, double pivot_threshold = 1e-12);

// Radius and trust region for a configuration under `opts`.
double step_radius(const Configuration& c, const Manifold& M, const SolveOptions& opts);

StepResult local_step(const Configuration& current, const Configuration& target, const Manifold& M,
                      FieldClass cls, const SolveOptions& opts);

struct PathRequest {
  double delta = 0;  // required waypoint separation
  double radius_factor = 0.25;
  double step_factor = 0.25;
  double max_radius = 0.5;
  int max_retries = 8;
};

// Collision-free polyline in M^(n) from x to y; consecutive waypoints are
// within step_factor * radius(waypoint) per point and every waypoint has
// separation >= delta.  Throws PlannerError.
std::vector<Configuration> plan_path(const Configuration& x, const Configuration& y,
                                     const Manifold& M, const PathRequest& req, std::mt19937_64& rng);

struct SolveReport {
  std::vector<Configuration> waypoints;
  std::vector<StepReport> steps;
  std::size_t total_stages = 0;
  std::size_t bisections = 0;
  double delta = 0;
  double residual = 0;  // max_i distance(apply(program, x_i), y_i)

  // Filled by verification.
  bool structure_checked = false;
  bool structure_pass = false;
  double structure_defect = 0;
};

struct SolveResult {
  DiffeoProgram program;
  SolveReport report;
};

SolveResult solve(const Configuration& x, const Configuration& y, const Manifold& M,
                  FieldClass cls, const SolveOptions& opts = {});

}  // namespace flowmatch
