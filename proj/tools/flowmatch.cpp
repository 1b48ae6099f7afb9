#include "flowmatch/io.hpp"
#include "flowmatch/parallel.hpp"
#include "flowmatch/scenarios.hpp"
#include "flowmatch/solve.hpp"
#include "flowmatch/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

using namespace flowmatch;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kSolverFailure = 2, kCheckFailure = 3 };

constexpr double kResidualTol = 1e-6;
constexpr double kRoundtripTol = 1e-7;
constexpr double kFdStep = 1e-5;
constexpr std::size_t kSolveSamples = 200;

double default_structure_tol(Structure s) { return s == Structure::contact ? 1e-4 : 1e-5; }

std::uint64_t seed_override(std::uint64_t seed) {
  if (const char* env = std::getenv("FLOWMATCH_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw io::FormatError(std::string("FLOWMATCH_SEED is not an unsigned integer: ") + env);
    }
  }
  return seed;
}

std::vector<Vec> coords_of(const Configuration& c) {
  std::vector<Vec> out;
  for (const Point& p : c.points()) out.push_back(p.coords);
  return out;
}

void print_structure(const StructureReport& r) {
  std::printf("structure %s: max defect %.3e (tol %.1e, %zu samples, h %.0e)", to_string(r.structure).c_str(),
              r.max_defect, r.tol, r.samples, r.h);
  if (r.structure == Structure::contact) std::printf(", lambda in [%.6g, %.6g]", r.lambda_min, r.lambda_max);
  std::printf(" %s\n", r.pass ? "ok" : "FAILED");
  if (r.lambda_out_of_model) std::printf("warning: non-positive conformal factor, outside the flow model\n");
}

int run_scenario(io::Scenario sc, const std::string& program_out, const std::string& report_out) {
  sc.options.seed = seed_override(sc.seed);
  Configuration x, y;
  try {
    x = Configuration::from_coords(sc.manifold, sc.source);
  } catch (const InvalidConfiguration& e) {
    std::fprintf(stderr, "invalid scenario: source points %zu and %zu coincide\n", e.first, e.second);
    return kInvalid;
  }
  try {
    y = Configuration::from_coords(sc.manifold, sc.target);
  } catch (const InvalidConfiguration& e) {
    std::fprintf(stderr, "invalid scenario: target points %zu and %zu coincide\n", e.first, e.second);
    return kInvalid;
  }
  try {
    require_compatible(sc.cls, sc.manifold);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "invalid scenario: %s\n", e.what());
    return kInvalid;
  }

  SolveResult res;
  try {
    res = solve(x, y, sc.manifold, sc.cls, sc.options);
  } catch (const SolveError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kSolverFailure;
  }

  SolveReport& rep = res.report;
  StructureReport sr;
  if (sc.manifold.structure() != Structure::none) {
    const SampleSet samples = structure_samples(res.program, coords_of(x), kSolveSamples, sc.options.seed);
    sr = check_structure(res.program, samples.points, kFdStep, default_structure_tol(sc.manifold.structure()));
    rep.structure_checked = true;
    rep.structure_pass = sr.pass;
    rep.structure_defect = sr.max_defect;
  }

  if (!program_out.empty()) io::write_json_atomic(program_out, io::to_json(res.program, &x, &y));
  if (!report_out.empty()) {
    io::json j = io::to_json(rep, sc.manifold);
    if (rep.structure_checked) j["structure"] = io::to_json(sr);
    io::write_json_atomic(report_out, j);
  }

  std::printf("class %s, n = %zu, %zu stages over %zu legs, %zu bisections\n", to_string(sc.cls).c_str(), x.size(),
              rep.total_stages, rep.steps.size(), rep.bisections);
  std::printf("residual %.3e (tol %.0e) %s\n", rep.residual, kResidualTol,
              rep.residual <= kResidualTol ? "ok" : "FAILED");
  if (rep.structure_checked) print_structure(sr);

  if (!(rep.residual <= kResidualTol)) return kSolverFailure;
  if (rep.structure_checked && !rep.structure_pass) return kCheckFailure;
  return kOk;
}

int cmd_solve(const std::string& scenario_path, const std::string& program_out, const std::string& report_out) {
  io::Scenario sc;
  try {
    sc = io::scenario_from_json(io::read_json(scenario_path));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "invalid scenario: %s\n", e.what());
    return kInvalid;
  }
  return run_scenario(std::move(sc), program_out, report_out);
}

int cmd_verify(const std::string& path, std::size_t samples, std::optional<double> tol) {
  io::LoadedProgram lp;
  try {
    lp = io::program_from_json(io::read_json(path));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cannot load program: %s\n", e.what());
    return kInvalid;
  }
  const DiffeoProgram& prog = lp.program;
  const Manifold& M = prog.manifold;
  std::vector<Vec> anchors;
  if (lp.source)
    for (const auto& p : *lp.source) anchors.push_back(Eigen::Map<const Vec>(p.data(), static_cast<Eigen::Index>(p.size())));
  for (const Vec& a : anchors)
    if (a.size() != M.dim()) {
      std::fprintf(stderr, "cannot load program: embedded point has wrong dimension\n");
      return kInvalid;
    }

  bool ok = true;
  io::json out{{"version", io::kFormatVersion}};
  const SampleSet ss = structure_samples(prog, anchors, samples, seed_override(1));

  if (M.structure() != Structure::none) {
    const StructureReport sr = check_structure(prog, ss.points, kFdStep, tol.value_or(default_structure_tol(M.structure())));
    print_structure(sr);
    out["structure"] = io::to_json(sr);
    ok = ok && sr.pass;
  }

  const RoundtripReport rr = roundtrip_check(prog, ss.points, kRoundtripTol);
  std::printf("roundtrip: max residual %.3e (tol %.0e) %s\n", rr.max_residual, rr.tol, rr.pass ? "ok" : "FAILED");
  out["roundtrip"] = io::to_json(rr);
  ok = ok && rr.pass;

  if (lp.source && lp.target) {
    if (lp.source->size() != lp.target->size()) {
      std::fprintf(stderr, "cannot load program: embedded source and target differ in size\n");
      return kInvalid;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < lp.source->size(); ++i) {
      const Vec& s = anchors[i];
      const auto& t = (*lp.target)[i];
      worst = std::max(worst, distance(M, apply(prog, canonicalize(M, s)).coords,
                                       Vec(Eigen::Map<const Vec>(t.data(), static_cast<Eigen::Index>(t.size())))));
    }
    const bool pass = worst <= kResidualTol;
    std::printf("point match: max residual %.3e (tol %.0e) %s\n", worst, kResidualTol, pass ? "ok" : "FAILED");
    out["point_match"] = {{"max_residual", worst}, {"tol", kResidualTol}, {"pass", pass}};
    ok = ok && pass;
  }
  out["pass"] = ok;
  std::printf("%s\n", out.dump().c_str());
  return ok ? kOk : kCheckFailure;
}

int cmd_grid(const std::string& path, const std::string& bbox_text, int resolution, const std::string& csv_out) {
  io::LoadedProgram lp;
  try {
    lp = io::program_from_json(io::read_json(path));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cannot load program: %s\n", e.what());
    return kInvalid;
  }
  const Manifold& M = lp.program.manifold;
  const int m = M.dim();
  std::vector<double> bbox;
  {
    std::stringstream ss(bbox_text);
    std::string item;
    try {
      while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        bbox.push_back(std::stod(item, &used));
        if (used != item.size() || !std::isfinite(bbox.back())) throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      std::fprintf(stderr, "bad bbox: could not parse \"%s\"\n", bbox_text.c_str());
      return kInvalid;
    }
  }
  if (static_cast<int>(bbox.size()) != 2 * m) {
    std::fprintf(stderr, "bad bbox: expected %d numbers (lower corner then upper corner)\n", 2 * m);
    return kInvalid;
  }
  for (int a = 0; a < m; ++a)
    if (!(bbox[static_cast<std::size_t>(a)] < bbox[static_cast<std::size_t>(a + m)])) {
      std::fprintf(stderr, "bad bbox: lower corner must be below upper corner in every coordinate\n");
      return kInvalid;
    }
  if (resolution < 2) {
    std::fprintf(stderr, "bad resolution: need R >= 2\n");
    return kInvalid;
  }
  double total = 1.0;
  for (int a = 0; a < m; ++a) total *= resolution;
  if (total > 5e7) {
    std::fprintf(stderr, "bad resolution: %g vertices is too many\n", total);
    return kInvalid;
  }

  const auto count = static_cast<std::size_t>(total);
  std::vector<Vec> vertices(count, Vec(m));
  for (std::size_t idx = 0; idx < count; ++idx) {
    // Last coordinate varies fastest: lexicographic in (i_0, ..., i_{m-1}).
    std::size_t rest = idx;
    for (int a = m - 1; a >= 0; --a) {
      const std::size_t i = rest % static_cast<std::size_t>(resolution);
      rest /= static_cast<std::size_t>(resolution);
      const double lo = bbox[static_cast<std::size_t>(a)], hi = bbox[static_cast<std::size_t>(a + m)];
      vertices[idx][a] = lo + (hi - lo) * static_cast<double>(i) / (resolution - 1);
    }
  }
  const std::vector<Vec> images = kernels::map_points_omp(lp.program, vertices);

  std::string text;
  for (int a = 0; a < m; ++a) text += (a ? ",x" : "x") + std::to_string(a);
  for (int a = 0; a < m; ++a) text += ",y" + std::to_string(a);
  text += '\n';
  char buf[32];
  for (std::size_t idx = 0; idx < count; ++idx) {
    const Vec img = canonicalize(M, images[idx]).coords;
    for (int a = 0; a < m; ++a) {
      std::snprintf(buf, sizeof buf, a ? ",%.17g" : "%.17g", vertices[idx][a]);
      text += buf;
    }
    for (int a = 0; a < m; ++a) {
      std::snprintf(buf, sizeof buf, ",%.17g", img[a]);
      text += buf;
    }
    text += '\n';
  }
  io::write_text_atomic(csv_out, text);
  std::printf("wrote %zu rows to %s\n", count, csv_out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-matching diffeomorphisms built from flows of compactly supported fields"};
  app.require_subcommand(1);

  std::string scenario, program, report, csv, bbox, demo;
  std::size_t samples = 200;
  std::optional<double> tol;
  int resolution = 0;

  auto* solve_cmd = app.add_subcommand("solve", "Solve a scenario and write the program");
  solve_cmd->add_option("scenario", scenario, "Scenario JSON")->required();
  solve_cmd->add_option("-o,--output", program, "Program JSON to write")->required();
  solve_cmd->add_option("-r,--report", report, "Solve report JSON to write");

  auto* verify_cmd = app.add_subcommand("verify", "Check structure, roundtrip and point matching of a program");
  verify_cmd->add_option("program", program, "Program JSON")->required();
  verify_cmd->add_option("--samples", samples, "Number of sample points")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--tol", tol, "Structure defect tolerance")->check(CLI::PositiveNumber);

  auto* grid_cmd = app.add_subcommand("grid", "Export the image of a regular grid as CSV");
  grid_cmd->add_option("program", program, "Program JSON")->required();
  grid_cmd->add_option("--bbox", bbox, "Lower corner then upper corner, comma separated")->required();
  grid_cmd->add_option("--resolution", resolution, "Vertices per axis (>= 2)")->required();
  grid_cmd->add_option("-o,--output", csv, "CSV file to write")->required();

  auto* demo_cmd = app.add_subcommand("demo", "Run a built-in scenario");
  demo_cmd->add_option("name", demo, "swap2d, braid3, torus-swap or contact3d")->required();
  demo_cmd->add_option("-o,--output", program, "Program JSON to write");
  demo_cmd->add_option("-r,--report", report, "Solve report JSON to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kInvalid;
  }

  try {
    if (*solve_cmd) return cmd_solve(scenario, program, report);
    if (*verify_cmd) return cmd_verify(program, samples, tol);
    if (*grid_cmd) return cmd_grid(program, bbox, resolution, csv);
    if (*demo_cmd) {
      io::Scenario sc;
      try {
        sc = demo_scenario(demo);
      } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kInvalid;
      }
      return run_scenario(std::move(sc), program, report);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalid;
  }
  return kOk;
}
