#include "flowmatch/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace flowmatch::io {

namespace {

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from(const json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError(std::string(what) + ": expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json mat_json(const Mat& A) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < A.cols(); ++c) row.push_back(A(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from(const json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": expected a matrix");
  if (j.empty()) return Mat();
  const std::size_t cols = j[0].size();
  Mat A(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vec row = vec_from(j[r], what);
    if (static_cast<std::size_t>(row.size()) != cols) throw FormatError(std::string(what) + ": ragged matrix");
    A.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return A;
}

std::vector<std::vector<double>> points_from(const json& j, const char* what) {
  if (!j.is_array()) throw FormatError(std::string(what) + ": expected a list of points");
  std::vector<std::vector<double>> out;
  for (const json& p : j) {
    const Vec v = vec_from(p, what);
    out.emplace_back(v.data(), v.data() + v.size());
  }
  return out;
}

json points_json(const Configuration& c) {
  json a = json::array();
  for (const Point& p : c.points()) a.push_back(vec_json(p.coords));
  return a;
}

const json& need(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing key \"") + key + "\"");
  return j.at(key);
}

void check_version(const json& j) {
  const json& v = need(j, "version");
  if (!v.is_number_integer() || v.get<int>() != kFormatVersion)
    throw FormatError("unsupported format version " + v.dump());
}

template <class T, class F>
T guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(e.what());
  }
}

}  // namespace

json to_json(const Manifold& M) {
  json j{{"kind", to_string(M.kind())}, {"dim", M.dim()}, {"structure", to_string(M.structure())}};
  if (M.is_torus()) j["periods"] = M.periods();
  return j;
}

Manifold manifold_from_json(const json& j) {
  return guarded<Manifold>([&] {
    const ManifoldKind kind = manifold_kind_from_string(need(j, "kind").get<std::string>());
    const int dim = need(j, "dim").get<int>();
    const Structure s = j.contains("structure") ? structure_from_string(j.at("structure").get<std::string>())
                                                : Structure::none;
    std::vector<double> periods;
    if (j.contains("periods")) periods = j.at("periods").get<std::vector<double>>();
    if (kind == ManifoldKind::flat_torus && periods.empty()) periods.assign(static_cast<std::size_t>(std::max(dim, 0)), 1.0);
    return Manifold(kind, dim, s, periods);
  });
}

json to_json(const IntegratorOptions& o) {
  return {{"method", to_string(o.method)},
          {"abs_tol", o.abs_tol},
          {"rel_tol", o.rel_tol},
          {"max_step", o.max_step},
          {"max_steps", o.max_steps}};
}

IntegratorOptions integrator_from_json(const json& j) {
  return guarded<IntegratorOptions>([&] {
    IntegratorOptions o;
    if (!j.is_object()) throw FormatError("integrator: expected an object");
    if (j.contains("method")) o.method = integrator_method_from_string(j.at("method").get<std::string>());
    if (j.contains("abs_tol")) o.abs_tol = j.at("abs_tol").get<double>();
    if (j.contains("rel_tol")) o.rel_tol = j.at("rel_tol").get<double>();
    if (j.contains("max_step")) o.max_step = j.at("max_step").get<double>();
    if (j.contains("max_steps")) o.max_steps = j.at("max_steps").get<long>();
    o.validate();
    return o;
  });
}

json to_json(const SolveOptions& o) {
  json j{{"radius_factor", o.radius_factor},
         {"step_factor", o.step_factor},
         {"newton_tol", o.newton_tol},
         {"max_newton_iters", o.max_newton_iters},
         {"fd_step", o.fd_step},
         {"max_path_retries", o.max_path_retries},
         {"max_radius", o.max_radius},
         {"max_stage_time", o.max_stage_time},
         {"max_bisections", o.max_bisections},
         {"profile", to_string(o.profile.kind())},
         {"integrator", to_json(o.integrator)},
         {"seed", o.seed}};
  if (o.separation_floor) j["separation_floor"] = *o.separation_floor;
  return j;
}

SolveOptions solve_options_from_json(const json& j, SolveOptions o) {
  return guarded<SolveOptions>([&] {
    if (!j.is_object()) throw FormatError("options: expected an object");
    static const char* known[] = {"radius_factor", "step_factor",   "newton_tol",     "max_newton_iters",
                                  "fd_step",       "max_path_retries", "max_radius",  "max_stage_time",
                                  "max_bisections", "profile",      "integrator",     "seed",
                                  "separation_floor"};
    for (const auto& [key, _] : j.items())
      if (std::find(std::begin(known), std::end(known), key) == std::end(known))
        throw FormatError("options: unknown key \"" + key + "\"");
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("radius_factor", o.radius_factor);
    get("step_factor", o.step_factor);
    get("newton_tol", o.newton_tol);
    get("max_newton_iters", o.max_newton_iters);
    get("fd_step", o.fd_step);
    get("max_path_retries", o.max_path_retries);
    get("max_radius", o.max_radius);
    get("max_stage_time", o.max_stage_time);
    get("max_bisections", o.max_bisections);
    get("seed", o.seed);
    if (j.contains("separation_floor")) o.separation_floor = j.at("separation_floor").get<double>();
    if (j.contains("profile")) o.profile = BumpProfile(bump_kind_from_string(j.at("profile").get<std::string>()));
    if (j.contains("integrator")) o.integrator = integrator_from_json(j.at("integrator"));
    o.validate();
    return o;
  });
}

json to_json(const VectorField& X) {
  json j{{"class", to_string(X.field_class())},
         {"center", vec_json(X.center().coords)},
         {"radius", X.radius()},
         {"direction", vec_json(X.direction())},
         {"profile", to_string(X.profile().kind())},
         {"scale", X.scale()}};
  const GeneratorData& g = X.generator_data();
  switch (X.field_class()) {
    case FieldClass::general: break;
    case FieldClass::hamiltonian: j["covector"] = vec_json(g.covector); break;
    case FieldClass::contact:
      j["covector"] = vec_json(g.covector);
      j["offset"] = g.offset;
      break;
    case FieldClass::divergence_free:
      j["extension"] = mat_json(g.extension);
      j["sign"] = g.sign;
      break;
  }
  return j;
}

VectorField field_from_json(const json& j, const Manifold& M) {
  return guarded<VectorField>([&] {
    const FieldClass cls = field_class_from_string(need(j, "class").get<std::string>());
    GeneratorData g;
    switch (cls) {
      case FieldClass::general: break;
      case FieldClass::hamiltonian: g.covector = vec_from(need(j, "covector"), "covector"); break;
      case FieldClass::contact:
        g.covector = vec_from(need(j, "covector"), "covector");
        g.offset = need(j, "offset").get<double>();
        break;
      case FieldClass::divergence_free:
        g.extension = mat_from(need(j, "extension"), "extension");
        g.sign = need(j, "sign").get<int>();
        break;
    }
    return VectorField::from_parts(cls, M, Point{vec_from(need(j, "center"), "center")},
                                   need(j, "radius").get<double>(),
                                   vec_from(need(j, "direction"), "direction"),
                                   BumpProfile(bump_kind_from_string(need(j, "profile").get<std::string>())),
                                   need(j, "scale").get<double>(), std::move(g));
  });
}

json to_json(const DiffeoProgram& prog, const Configuration* source, const Configuration* target) {
  json stages = json::array();
  for (const Stage& s : prog.stages) stages.push_back({{"time", s.time}, {"field", to_json(s.field)}});
  json j{{"version", kFormatVersion},
         {"manifold", to_json(prog.manifold)},
         {"integrator", to_json(prog.options)},
         {"stages", std::move(stages)}};
  if (source) j["source"] = points_json(*source);
  if (target) j["target"] = points_json(*target);
  return j;
}

LoadedProgram program_from_json(const json& j) {
  return guarded<LoadedProgram>([&] {
    check_version(j);
    LoadedProgram out;
    out.program.manifold = manifold_from_json(need(j, "manifold"));
    if (j.contains("integrator")) out.program.options = integrator_from_json(j.at("integrator"));
    const json& stages = need(j, "stages");
    if (!stages.is_array()) throw FormatError("stages: expected an array");
    for (const json& s : stages) {
      const double t = need(s, "time").get<double>();
      if (!std::isfinite(t)) throw FormatError("stage time must be finite");
      out.program.stages.push_back(Stage{field_from_json(need(s, "field"), out.program.manifold), t});
    }
    if (j.contains("source")) out.source = points_from(j.at("source"), "source");
    if (j.contains("target")) out.target = points_from(j.at("target"), "target");
    return out;
  });
}

json to_json(const Scenario& s) {
  return {{"version", kFormatVersion},
          {"manifold", to_json(s.manifold)},
          {"class", to_string(s.cls)},
          {"source", s.source},
          {"target", s.target},
          {"options", to_json(s.options)},
          {"seed", s.seed}};
}

Scenario scenario_from_json(const json& j) {
  return guarded<Scenario>([&] {
    check_version(j);
    Scenario s;
    s.manifold = manifold_from_json(need(j, "manifold"));
    s.cls = field_class_from_string(need(j, "class").get<std::string>());
    s.source = points_from(need(j, "source"), "source");
    s.target = points_from(need(j, "target"), "target");
    if (s.source.size() != s.target.size())
      throw FormatError("source has " + std::to_string(s.source.size()) + " points but target has " +
                        std::to_string(s.target.size()));
    if (j.contains("options")) s.options = solve_options_from_json(j.at("options"));
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    s.options.seed = s.seed;
    return s;
  });
}

json to_json(const SolveReport& r, const Manifold& M) {
  json steps = json::array();
  for (const StepReport& s : r.steps)
    steps.push_back({{"iterations", s.iterations},
                     {"residual", s.residual},
                     {"condition", s.condition},
                     {"converged", s.converged}});
  json waypoints = json::array();
  for (const Configuration& c : r.waypoints) waypoints.push_back(points_json(c));
  json j{{"version", kFormatVersion},
         {"manifold", to_json(M)},
         {"residual", r.residual},
         {"delta", std::isfinite(r.delta) ? json(r.delta) : json(nullptr)},
         {"total_stages", r.total_stages},
         {"bisections", r.bisections},
         {"waypoints", std::move(waypoints)},
         {"steps", std::move(steps)},
         {"structure_checked", r.structure_checked}};
  if (r.structure_checked) {
    j["structure_pass"] = r.structure_pass;
    j["structure_defect"] = r.structure_defect;
  }
  return j;
}

json to_json(const StructureReport& r) {
  json j{{"structure", to_string(r.structure)},
         {"samples", r.samples},
         {"max_defect", r.max_defect},
         {"h", r.h},
         {"tol", r.tol},
         {"pass", r.pass}};
  if (r.structure == Structure::contact) {
    j["lambda_min"] = r.lambda_min;
    j["lambda_max"] = r.lambda_max;
    j["lambda_out_of_model"] = r.lambda_out_of_model;
  }
  return j;
}

json to_json(const RoundtripReport& r) {
  return {{"samples", r.samples}, {"max_residual", r.max_residual}, {"tol", r.tol}, {"pass", r.pass}};
}

json to_json(const OracleReport& r) {
  return {{"class", to_string(r.cls)},
          {"samples", r.samples},
          {"max_discrepancy", r.max_discrepancy},
          {"max_alpha_residual", r.max_alpha_residual},
          {"tol", r.tol},
          {"pass", r.pass}};
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path + ": " + ec.message());
  }
}

void write_json_atomic(const std::string& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

}  // namespace flowmatch::io
