// Acceptance suite: one PASS/FAIL line per criterion, with indented detail.
// Exit status is the number of failed criteria (0 when all pass).

#include "flowmatch/io.hpp"
#include "flowmatch/parallel.hpp"
#include "flowmatch/scenarios.hpp"
#include "flowmatch/solve.hpp"
#include "flowmatch/verify.hpp"

#include "support.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>

using namespace flowmatch;
using namespace flowmatch::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string summary;
};

struct Cell {
  FieldClass cls;
  Manifold manifold;
  std::string label;
};

std::vector<Cell> class_cells() {
  std::vector<Cell> out;
  auto add = [&](FieldClass cls, int dim, bool torus, const char* label) {
    out.push_back({cls, manifold_for(cls, dim, torus), std::string(to_string(cls)) + " on " + label});
  };
  add(FieldClass::general, 2, false, "R2");
  add(FieldClass::general, 3, false, "R3");
  add(FieldClass::general, 4, false, "R4");
  add(FieldClass::general, 2, true, "T2");
  add(FieldClass::hamiltonian, 2, false, "R2");
  add(FieldClass::hamiltonian, 4, false, "R4");
  add(FieldClass::hamiltonian, 2, true, "T2");
  add(FieldClass::divergence_free, 2, false, "R2");
  add(FieldClass::divergence_free, 3, false, "R3");
  add(FieldClass::divergence_free, 4, false, "R4");
  add(FieldClass::divergence_free, 2, true, "T2");
  add(FieldClass::contact, 3, false, "R3");
  add(FieldClass::contact, 5, false, "R5");
  return out;
}

constexpr double kMinSeparation = 0.1;

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Solver outputs kept for the roundtrip criterion.
struct Solved {
  std::string label;
  DiffeoProgram program;
  std::vector<Vec> anchors;
};
std::vector<Solved> g_solved;

// ---------------------------------------------------------------------------

Outcome transitivity() {
  const std::size_t ns[] = {1, 2, 3, 4, 6};
  constexpr int kSeeds = 20;
  bool ok = true;
  double worst_residual = 0.0, worst_cell_time = 0.0;
  std::size_t solves = 0, failures = 0;
  for (const Cell& cell : class_cells())
    for (std::size_t n : ns) {
      const auto t0 = Clock::now();
      double cell_residual = 0.0;
      std::size_t cell_failures = 0;
      for (int seed = 0; seed < kSeeds; ++seed) {
        std::mt19937_64 rng(1000003ULL * n + static_cast<std::uint64_t>(seed));
        const auto x = random_configuration(rng, cell.manifold, n, kMinSeparation);
        const auto y = random_configuration(rng, cell.manifold, n, kMinSeparation);
        SolveOptions opts;
        opts.seed = static_cast<std::uint64_t>(seed) + 1;
        ++solves;
        try {
          auto r = solve(x, y, cell.manifold, cell.cls, opts);
          cell_residual = std::max(cell_residual, r.report.residual);
          if (!(r.report.residual <= 1e-6)) ++cell_failures;
          if (seed < 2) g_solved.push_back({cell.label + " n=" + std::to_string(n), std::move(r.program), coords(x)});
        } catch (const std::exception& e) {
          ++cell_failures;
          std::printf("    %s n=%zu seed %d: %s\n", cell.label.c_str(), n, seed, e.what());
        }
      }
      const double dt = seconds_since(t0);
      const bool cell_ok = cell_failures == 0 && dt <= 60.0;
      std::printf("    %-26s n=%zu  max residual %.2e  failures %zu/%d  %.1f s%s\n", cell.label.c_str(), n,
                  cell_residual, cell_failures, kSeeds, dt, cell_ok ? "" : "  <-- FAIL");
      std::fflush(stdout);
      ok = ok && cell_ok;
      failures += cell_failures;
      worst_residual = std::max(worst_residual, cell_residual);
      worst_cell_time = std::max(worst_cell_time, dt);
    }
  return {ok, std::to_string(solves) + " solves, " + std::to_string(failures) + " failed, max residual " +
                  fmt("%.2e", worst_residual) + " (tol 1e-6), slowest cell " + fmt("%.1f", worst_cell_time) +
                  " s (limit 60 s)"};
}

// ---------------------------------------------------------------------------

Outcome jacobian_identity() {
  std::mt19937_64 rng(20);
  const auto cells = class_cells();
  double worst = 0.0, worst_cond = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Cell& cell = cells[static_cast<std::size_t>(trial) % cells.size()];
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    const auto fam = build_family(random_configuration(rng, cell.manifold, n, kMinSeparation), cell.manifold, cell.cls);
    const auto J = jacobian_at_zero(fam);
    const auto N = static_cast<Eigen::Index>(fam.size());
    worst = std::max(worst, (J.matrix - fam.scale * Mat::Identity(N, N)).cwiseAbs().maxCoeff());
    worst_cond = std::max(worst_cond, std::abs(J.condition - 1.0));
  }
  return {worst <= 1e-12, "50 families, max |J - c0 I| = " + fmt("%.1e", worst) + " (tol 1e-12), max |cond - 1| = " +
                              fmt("%.1e", worst_cond)};
}

// ---------------------------------------------------------------------------

Outcome certificate() {
  std::mt19937_64 rng(30);
  const auto cells = class_cells();
  double cross = 0.0, center = 0.0, sampled = 0.0, bound = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Cell& cell = cells[static_cast<std::size_t>(trial) % cells.size()];
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    const auto fam = build_family(random_configuration(rng, cell.manifold, n, kMinSeparation), cell.manifold, cell.cls);
    const auto rep = check_conditions9(fam, 0.0, 2000);
    cross = std::max(cross, rep.max_cross_error);
    center = std::max(center, rep.max_center_error);
    sampled = std::max(sampled, rep.sampled_sup);
    bound = std::max(bound, rep.sup_bound);
  }
  const bool ok = cross == 0.0 && center == 0.0 && sampled < 2.0 && bound < 2.0;
  return {ok, "100 configurations, max cross error " + fmt("%g", cross) + ", max center error " + fmt("%g", center) +
                  ", sampled sup " + fmt("%.4f", sampled) + ", analytic bound " + fmt("%.4f", bound) + " (< 2)"};
}

// ---------------------------------------------------------------------------

// Jacobian as the product of single-stage difference Jacobians along the
// trajectory.  Each factor is a mild map, so this avoids the truncation error
// that a stencil across the whole composition picks up.
JacobianResult stagewise_jacobian(const DiffeoProgram& prog, const Vec& p, double h) {
  const int m = prog.manifold.dim();
  JacobianResult out{Mat::Identity(m, m), p};
  for (auto it = prog.stages.rbegin(); it != prog.stages.rend(); ++it) {
    DiffeoProgram one;
    one.manifold = prog.manifold;
    one.options = prog.options;
    one.stages.push_back(*it);
    const auto jr = jacobian_and_image(one, out.image, h);
    out.jacobian = jr.jacobian * out.jacobian;
    out.image = jr.image;
  }
  return out;
}

Outcome structure_on_demos() {
  bool ok = true;
  std::string summary;
  for (const auto& name : demo_names()) {
    const io::Scenario sc = demo_scenario(name);
    const auto x = Configuration::from_coords(sc.manifold, sc.source);
    const auto y = Configuration::from_coords(sc.manifold, sc.target);
    SolveOptions opts = sc.options;
    opts.seed = sc.seed;
    auto res = solve(x, y, sc.manifold, sc.cls, opts);
    const bool contact = sc.manifold.structure() == Structure::contact;
    const double tol = contact ? 1e-4 : 1e-5;
    const auto samples = structure_samples(res.program, coords(x), 200, sc.seed).points;
    const auto rep = check_structure(res.program, samples, 1e-5, tol);
    const bool lambda_ok = !contact || (rep.lambda_min >= 0.5 && rep.lambda_max <= 2.0);
    const bool demo_ok = rep.pass && lambda_ok;
    ok = ok && demo_ok;

    std::printf("    %-10s %zu stages, residual %.1e, defect %.3e (tol %.0e)", name.c_str(), res.program.size(),
                res.report.residual, rep.max_defect, tol);
    if (contact) std::printf(", lambda [%.3g, %.3g] (need [0.5, 2])", rep.lambda_min, rep.lambda_max);
    std::printf("%s\n", demo_ok ? "" : "  <-- FAIL");
    // Diagnostics: O(h^2) scaling of the measured defect, and the defect of
    // the exact chain-rule product.
    for (double h : {1e-6, 1e-7})
      std::printf("      h = %.0e: defect %.3e\n", h, check_structure(res.program, samples, h, tol).max_defect);
    double chain_defect = 0.0, sigma = 0.0, lmin = 1e300, lmax = -1e300;
    for (const Vec& p : samples) {
      const auto jr = stagewise_jacobian(res.program, p, 1e-6);
      const auto d = pointwise_defect(sc.manifold, jr.jacobian, p, jr.image);
      chain_defect = std::max(chain_defect, d.defect);
      sigma = std::max(sigma, Eigen::JacobiSVD<Mat>(jr.jacobian).singularValues()[0]);
      lmin = std::min(lmin, d.lambda);
      lmax = std::max(lmax, d.lambda);
    }
    std::printf("      stagewise product: defect %.3e, largest singular value %.3g", chain_defect, sigma);
    if (contact) std::printf(", lambda [%.3g, %.3g]", lmin, lmax);
    std::printf("\n");
    std::fflush(stdout);
    g_solved.push_back({"demo " + name, std::move(res.program), coords(x)});
    summary += (summary.empty() ? "" : ", ") + name + " " + fmt("%.1e", rep.max_defect);
  }
  return {ok, "defects at h = 1e-5: " + summary};
}

// ---------------------------------------------------------------------------

Outcome field_oracles() {
  std::mt19937_64 rng(50);
  bool ok = true;
  std::string summary;
  const struct {
    FieldClass cls;
    int dim;
  } cases[] = {{FieldClass::hamiltonian, 2}, {FieldClass::hamiltonian, 4},     {FieldClass::contact, 3},
               {FieldClass::contact, 5},     {FieldClass::divergence_free, 2}, {FieldClass::divergence_free, 3},
               {FieldClass::divergence_free, 4}};
  for (const auto& c : cases) {
    const Manifold M = manifold_for(c.cls, c.dim);
    const auto fam = build_family(random_configuration(rng, M, 3, 0.3), M, c.cls);
    double worst = 0.0, alpha = 0.0;
    for (const VectorField& X : fam.fields) {
      std::vector<Vec> pts;
      for (int k = 0; k < 100; ++k)
        pts.push_back(X.center().coords + X.radius() * std::pow(std::uniform_real_distribution<double>(0, 1)(rng),
                                                                1.0 / c.dim) *
                                              random_unit(rng, c.dim));
      // Stencil step relative to the support radius: the bump's derivatives scale with 1/r.
      const auto rep = oracle_field_check(X, pts, 1e-6, 1e-5 * X.radius());
      worst = std::max(worst, rep.max_discrepancy);
      alpha = std::max(alpha, rep.max_alpha_residual);
    }
    const bool case_ok = worst <= 1e-6 && alpha <= 1e-12;
    ok = ok && case_ok;
    const std::string label = to_string(c.cls) + " R" + std::to_string(c.dim);
    std::printf("    %-22s %zu fields x 100 samples, max discrepancy %.2e", label.c_str(), fam.size(), worst);
    if (c.cls == FieldClass::contact) std::printf(", |alpha(X) - f| %.1e", alpha);
    std::printf("%s\n", case_ok ? "" : "  <-- FAIL");
    summary += (summary.empty() ? "" : ", ") + label + " " + fmt("%.1e", worst);
  }
  return {ok, summary + " (tol 1e-6)"};
}

// ---------------------------------------------------------------------------

Outcome group_consistency() {
  if (g_solved.empty())  // run on its own: use the demos
    for (const auto& name : demo_names()) {
      const io::Scenario sc = demo_scenario(name);
      const auto x = Configuration::from_coords(sc.manifold, sc.source);
      SolveOptions opts = sc.options;
      opts.seed = sc.seed;
      auto res = solve(x, Configuration::from_coords(sc.manifold, sc.target), sc.manifold, sc.cls, opts);
      g_solved.push_back({"demo " + name, std::move(res.program), coords(x)});
    }
  double worst = 0.0;
  std::string worst_label;
  std::size_t over = 0;
  for (const Solved& s : g_solved) {
    const auto pts = structure_samples(s.program, s.anchors, 50, 6).points;
    const auto rep = roundtrip_check(s.program, pts, 1e-7);
    if (rep.max_residual > 1e-7) {
      ++over;
      std::printf("    over tol: %-32s %.2e  (%zu stages)\n", s.label.c_str(), rep.max_residual, s.program.size());
    }
    if (rep.max_residual >= worst) {
      worst = rep.max_residual;
      worst_label = s.label;
    }
  }
  std::printf("    roundtrip over %zu solver outputs: max %.2e (%s), %zu over tol\n", g_solved.size(), worst,
              worst_label.c_str(), over);

  // Commutation of stages with disjoint supports.
  std::mt19937_64 rng(60);
  double commute = 0.0;
  const IntegratorOptions integ;
  for (const Cell& cell : class_cells()) {
    const int m = cell.manifold.dim();
    for (int trial = 0; trial < 5; ++trial) {
      const auto c = random_configuration(rng, cell.manifold, 2, 0.4);
      const double r = 0.45 * distance(cell.manifold, c[0], c[1]);
      const double scale = cell.cls == FieldClass::general ? 1.0 : 0.0;
      const auto A = make_bump(cell.cls, cell.manifold, c[0], random_unit(rng, m), r, BumpProfile(), scale);
      const auto B = make_bump(cell.cls, cell.manifold, c[1], random_unit(rng, m), r, BumpProfile(), scale);
      DiffeoProgram ab{cell.manifold, {{A, 0.9}, {B, -1.3}}, integ};
      DiffeoProgram ba{cell.manifold, {{B, -1.3}, {A, 0.9}}, integ};
      for (int k = 0; k < 40; ++k) {
        const Vec p = c[static_cast<std::size_t>(k % 2)].coords + 1.2 * r * random_unit(rng, m) *
                                                                    std::uniform_real_distribution<double>(0, 1)(rng);
        commute = std::max(commute, distance(cell.manifold, apply(ab, Point{p}), apply(ba, Point{p})));
      }
    }
  }
  std::printf("    disjoint-support commutation: max %.2e (tol %.0e)\n", commute, 2 * integ.abs_tol);
  const bool ok = worst <= 1e-7 && commute <= 2 * integ.abs_tol;
  return {ok, "roundtrip max " + fmt("%.2e", worst) + " (tol 1e-7) over " + std::to_string(g_solved.size()) +
                  " programs, commutation max " + fmt("%.1e", commute) + " (tol 2e-10)"};
}

// ---------------------------------------------------------------------------

Outcome orbit_derivative() {
  std::mt19937_64 rng(70);
  IntegratorOptions tight;
  tight.abs_tol = tight.rel_tol = 1e-14;
  double worst = 0.0;
  std::size_t checked = 0;
  for (const Cell& cell : class_cells()) {
    const auto fam = build_family(random_configuration(rng, cell.manifold, 3, 0.3), cell.manifold, cell.cls);
    const auto N = static_cast<Eigen::Index>(fam.size());
    const int m = cell.manifold.dim();
    auto stacked = [&](const Vec& t) {
      const auto c = eval_f(fam, t, tight);
      Vec v(N);
      for (std::size_t i = 0; i < c.size(); ++i)
        v.segment(static_cast<Eigen::Index>(i) * m, m) = cell.manifold.wrap(c[i].coords - fam.config[i].coords);
      return v;
    };
    for (Eigen::Index k = 0; k < N; ++k) {
      const double h = 0.02 * fam.radius;
      auto D = [&](double s) {
        return Vec((stacked(s * Vec::Unit(N, k)) - stacked(-s * Vec::Unit(N, k))) / (2 * s));
      };
      const Vec rich = (4.0 * D(h / 2) - D(h)) / 3.0;
      Vec exact(N);
      for (std::size_t i = 0; i < fam.config.size(); ++i)
        exact.segment(static_cast<Eigen::Index>(i) * m, m) = fam.fields[static_cast<std::size_t>(k)](fam.config[i].coords);
      worst = std::max(worst, (rich - exact).cwiseAbs().maxCoeff());
      ++checked;
    }
  }
  return {worst <= 1e-8, std::to_string(checked) + " directions over " + std::to_string(class_cells().size()) +
                             " families, max deviation " + fmt("%.2e", worst) + " (tol 1e-8)"};
}

// ---------------------------------------------------------------------------

Outcome planner_separation() {
  std::mt19937_64 rng(80);
  const auto cells = class_cells();
  std::size_t waypoints = 0, violations = 0, swaps = 0, failures = 0;
  double tightest = 1e300;
  for (int trial = 0; trial < 100; ++trial) {
    const Manifold& M = cells[static_cast<std::size_t>(trial) % cells.size()].manifold;
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
    const auto x = random_configuration(rng, M, n, kMinSeparation);
    Configuration y;
    if (trial % 2 == 0) {
      // Deliberate straight-line collisions: swap two points, cycle the rest.
      std::vector<Point> p(x.points().begin(), x.points().end());
      std::swap(p[0], p[1]);
      if (trial % 4 == 0) std::rotate(p.begin(), p.begin() + 1, p.end());
      y = Configuration::make(M, std::move(p));
      ++swaps;
    } else {
      y = random_configuration(rng, M, n, kMinSeparation);
    }
    PathRequest req;
    req.delta = 0.5 * std::min(separation(x, M), separation(y, M));
    try {
      std::mt19937_64 prng(static_cast<std::uint64_t>(trial));
      const auto path = plan_path(x, y, M, req, prng);
      for (const auto& c : path) {
        const double s = separation(c, M);
        tightest = std::min(tightest, s / req.delta);
        if (s < req.delta) ++violations;
      }
      waypoints += path.size();
    } catch (const std::exception& e) {
      ++failures;
      std::printf("    problem %d: %s\n", trial, e.what());
    }
  }
  std::printf("    %zu problems (%zu with swaps), %zu waypoints scanned, min separation / delta = %.4f\n",
              std::size_t{100}, swaps, waypoints, tightest);
  return {violations == 0 && failures == 0, std::to_string(waypoints) + " waypoints, " + std::to_string(violations) +
                                                " below delta, " + std::to_string(failures) + " planner failures"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowmatch acceptance suite"};
  std::vector<int> only;
  app.add_option("criteria", only, "Criterion numbers to run (default: all)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"end-to-end n-transitivity", transitivity},
      {"jacobian at zero equals c0 I", jacobian_identity},
      {"bump family certificate", certificate},
      {"structure preservation on demos", structure_on_demos},
      {"defining-equation oracles", field_oracles},
      {"group self-consistency", group_consistency},
      {"orbit-map derivative", orbit_derivative},
      {"planner separation", planner_separation},
  };
  std::printf("threads: %d\n", kernels::max_threads());
  std::vector<std::string> lines;
  int failed = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = static_cast<int>(c) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    std::printf("[%d] %s\n", id, criteria[c].first.c_str());
    std::fflush(stdout);
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    char line[1024];
    std::snprintf(line, sizeof line, "%s  %d. %s: %s [%.1f s]", o.pass ? "PASS" : "FAIL", id,
                  criteria[c].first.c_str(), o.summary.c_str(), seconds_since(t0));
    std::printf("%s\n", line);
    std::fflush(stdout);
    lines.push_back(line);
    failed += o.pass ? 0 : 1;
  }
  std::printf("\nsummary\n");
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  return failed;
}
