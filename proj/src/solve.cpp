#include "flowmatch/solve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace flowmatch {

void SolveOptions::validate() const {
  if (!(radius_factor > 0.0 && radius_factor < 0.5)) throw std::invalid_argument("radius_factor must be in (0, 1/2)");
  if (!(step_factor > 0.0 && step_factor < 1.0)) throw std::invalid_argument("step_factor must be in (0, 1)");
  if (!(newton_tol > 0.0)) throw std::invalid_argument("newton_tol must be positive");
  if (max_newton_iters < 1) throw std::invalid_argument("max_newton_iters must be >= 1");
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be positive");
  if (fd_step < 100.0 * integrator.abs_tol)
    throw std::invalid_argument("fd_step must be at least 100 x integrator abs_tol");
  if (separation_floor && !(*separation_floor > 0.0)) throw std::invalid_argument("separation_floor must be positive");
  if (!(max_radius > 0.0)) throw std::invalid_argument("max_radius must be positive");
  if (!(max_stage_time > 0.0)) throw std::invalid_argument("max_stage_time must be positive");
  if (max_path_retries < 0 || max_bisections < 0) throw std::invalid_argument("retry counts must be >= 0");
  integrator.validate();
}

FamilyOptions SolveOptions::family() const {
  FamilyOptions f;
  f.radius_factor = radius_factor;
  f.max_radius = max_radius;
  f.profile = profile;
  return f;
}

JacobianAtZero jacobian_at_zero(const FieldFamily& family, double pivot_threshold) {
  const int m = family.manifold.dim();
  const auto N = static_cast<Eigen::Index>(family.size());
  JacobianAtZero out;
  out.matrix.resize(N, N);
  for (Eigen::Index k = 0; k < N; ++k) {
    const VectorField& X = family.fields[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < family.config.size(); ++i) {
      const Vec v = X(family.config[i].coords);
      for (int j = 0; j < m; ++j) out.matrix(static_cast<Eigen::Index>(i) * m + j, k) = v[j];
    }
  }
  Eigen::JacobiSVD<Mat> svd(out.matrix);
  const Vec& sv = svd.singularValues();
  out.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  Eigen::PartialPivLU<Mat> lu(out.matrix);
  const Vec pivots = lu.matrixLU().diagonal().cwiseAbs();
  out.invertible = pivots.maxCoeff() > 0.0 && pivots.minCoeff() > pivot_threshold * pivots.maxCoeff();
  return out;
}

double step_radius(const Configuration& c, const Manifold& M, const SolveOptions& opts) {
  return family_radius(c, M, opts.family());
}

namespace {

struct BlockSolve {
  Vec times;
  int iterations = 0;
  double residual = 0;
  double sigma_max = 0;
  double sigma_min = std::numeric_limits<double>::infinity();
};

// Newton on the m times of the fields centred at one point.  Supports of other
// points' fields are disjoint from this point's ball, so the N x N system is
// block diagonal and each block is solved on its own.
BlockSolve solve_block(const FieldFamily& family, std::size_t i, const Vec& target,
                       const SolveOptions& opts) {
  const Manifold& M = family.manifold;
  const int m = M.dim();
  const Vec& start = family.config[i].coords;
  const std::size_t first = i * static_cast<std::size_t>(m);

  auto residual = [&](const Vec& t) {
    Vec x = start;
    for (int j = m - 1; j >= 0; --j)
      x = flow_raw(family.fields[first + static_cast<std::size_t>(j)], x, t[j], opts.integrator);
    return Vec(M.wrap(x - target));
  };

  BlockSolve out;
  out.times = M.wrap(target - start) / family.scale;
  // Iterates stay in the box |t| <= max_stage_time; outside it the flow
  // integrations get long and the answer would be rejected anyway.
  auto in_box = [&](const Vec& t) { return t.cwiseAbs().maxCoeff() <= opts.max_stage_time; };
  if (!in_box(out.times)) throw StepFailure("stage time exceeds max_stage_time");
  Vec R = residual(out.times);
  double norm = R.norm();
  // Half the tolerance leaves room for rounding in the canonicalized re-evaluation.
  while (norm > 0.5 * opts.newton_tol) {
    if (out.iterations >= opts.max_newton_iters)
      throw StepFailure("newton did not converge within max_newton_iters");
    ++out.iterations;
    Mat J(m, m);
    for (int j = 0; j < m; ++j) {
      Vec tp = out.times;
      tp[j] += opts.fd_step;
      J.col(j) = (residual(tp) - R) / opts.fd_step;
    }
    Eigen::JacobiSVD<Mat> svd(J);
    const Vec& sv = svd.singularValues();
    out.sigma_max = std::max(out.sigma_max, sv[0]);
    out.sigma_min = std::min(out.sigma_min, sv[sv.size() - 1]);
    if (!(sv[sv.size() - 1] > 0.0)) throw StepFailure("singular Newton jacobian");
    const Vec delta = -Eigen::PartialPivLU<Mat>(J).solve(R);

    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, lambda *= 0.5) {
      const Vec trial = out.times + lambda * delta;
      if (!in_box(trial)) continue;
      const Vec Rt = residual(trial);
      const double nt = Rt.norm();
      if (nt < norm) {
        out.times = trial;
        R = Rt;
        norm = nt;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw StepFailure("damped newton step failed to decrease the residual");
  }
  out.residual = norm;
  return out;
}

}  // namespace

StepResult local_step(const Configuration& current, const Configuration& target, const Manifold& M,
                      FieldClass cls, const SolveOptions& opts) {
  opts.validate();
  require_compatible(cls, M);
  if (current.size() != target.size()) throw std::invalid_argument("configurations differ in size");
  const double r = step_radius(current, M, opts);
  const double rho = opts.step_factor * r;
  std::vector<double> disp(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) {
    disp[i] = distance(M, current[i], target[i]);
    if (disp[i] > rho * (1.0 + 1e-9)) throw StepFailure("displacement exceeds the local trust region");
  }

  const FieldFamily family = build_family(current, M, cls, opts.family());
  const int m = M.dim();
  Vec times = Vec::Zero(static_cast<Eigen::Index>(family.size()));
  StepResult out;
  double sigma_max = 0.0;
  double sigma_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (disp[i] == 0.0) continue;
    const BlockSolve b = solve_block(family, i, target[i].coords, opts);
    times.segment(static_cast<Eigen::Index>(i) * m, m) = b.times;
    out.report.iterations = std::max(out.report.iterations, b.iterations);
    sigma_max = std::max(sigma_max, b.sigma_max);
    sigma_min = std::min(sigma_min, b.sigma_min);
  }
  out.report.condition = (sigma_max > 0.0 && std::isfinite(sigma_min)) ? sigma_max / sigma_min : 1.0;

  DiffeoProgram full = family_program(family, times, opts.integrator);
  out.program.manifold = M;
  out.program.options = opts.integrator;
  for (Stage& s : full.stages)
    if (s.time != 0.0) out.program.stages.push_back(std::move(s));
  out.reached = apply_config(out.program, current);
  out.report.residual = max_pointwise_distance(M, out.reached, target);
  out.report.converged = out.report.residual <= opts.newton_tol;
  if (!out.report.converged) throw StepFailure("local step residual above newton_tol after re-evaluation");
  return out;
}

namespace {

Configuration midpoint(const Manifold& M, const Configuration& a, const Configuration& b) {
  std::vector<Point> pts;
  pts.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    pts.push_back(Point{a[i].coords + 0.5 * M.wrap(b[i].coords - a[i].coords)});
  return Configuration::make(M, std::move(pts));
}

}  // namespace

SolveResult solve(const Configuration& x, const Configuration& y, const Manifold& M,
                  FieldClass cls, const SolveOptions& opts) {
  opts.validate();
  require_compatible(cls, M);
  if (x.size() != y.size()) throw std::invalid_argument("source and target differ in point count");
  if (x.size() == 0) throw std::invalid_argument("empty configuration");

  SolveResult result;
  SolveReport& rep = result.report;
  const double allowed = 0.5 * std::min(separation(x, M), separation(y, M));
  rep.delta = opts.separation_floor ? std::min(*opts.separation_floor, allowed) : allowed;

  std::mt19937_64 rng(opts.seed);
  PathRequest req;
  req.delta = rep.delta;
  req.radius_factor = opts.radius_factor;
  req.step_factor = opts.step_factor;
  req.max_radius = opts.max_radius;
  req.max_retries = opts.max_path_retries;
  rep.waypoints = plan_path(x, y, M, req, rng);

  // Step programs in execution order; assembled outermost-last below.
  std::vector<DiffeoProgram> steps;
  Configuration current = x;
  std::function<void(const Configuration&, int)> leg = [&](const Configuration& target, int depth) {
    try {
      StepResult s = local_step(current, target, M, cls, opts);
      rep.steps.push_back(s.report);
      current = std::move(s.reached);
      steps.push_back(std::move(s.program));
      return;
    } catch (const StepFailure&) {
    } catch (const InvalidConfiguration&) {
    } catch (const IntegrationError&) {
    }
    if (depth >= opts.max_bisections) throw SolveError("local step failed after repeated bisection");
    ++rep.bisections;
    const Configuration mid = midpoint(M, current, target);
    leg(mid, depth + 1);
    leg(target, depth + 1);
  };
  for (std::size_t w = 1; w < rep.waypoints.size(); ++w) leg(rep.waypoints[w], 0);

  DiffeoProgram& prog = result.program;
  prog.manifold = M;
  prog.options = opts.integrator;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it)
    prog.stages.insert(prog.stages.end(), it->stages.begin(), it->stages.end());
  rep.total_stages = prog.size();

  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, distance(M, apply(prog, x[i]), y[i]));
  rep.residual = worst;
  return result;
}

}  // namespace flowmatch
