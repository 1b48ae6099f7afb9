#pragma once

// JSON file formats.  Every top-level document carries "version": 1.  Doubles
// are written in shortest round-trip form, so programs reload bit-exactly.

#include "flowmatch/solve.hpp"
#include "flowmatch/verify.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>

namespace flowmatch::io {

using json = nlohmann::json;

constexpr int kFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  Manifold manifold = Manifold::euclidean(2);
  FieldClass cls = FieldClass::general;
  std::vector<std::vector<double>> source;
  std::vector<std::vector<double>> target;
  SolveOptions options;
  std::uint64_t seed = 1;  // copied into options.seed
};

json to_json(const Manifold& M);
Manifold manifold_from_json(const json& j);

json to_json(const IntegratorOptions& o);
IntegratorOptions integrator_from_json(const json& j);

json to_json(const SolveOptions& o);
// Applies the keys present in `j` on top of `base`.
SolveOptions solve_options_from_json(const json& j, SolveOptions base = {});

json to_json(const VectorField& X);
VectorField field_from_json(const json& j, const Manifold& M);

// `source`/`target` are embedded when given, for later point-match checks.
json to_json(const DiffeoProgram& prog, const Configuration* source = nullptr,
             const Configuration* target = nullptr);

struct LoadedProgram {
  DiffeoProgram program;
  std::optional<std::vector<std::vector<double>>> source;
  std::optional<std::vector<std::vector<double>>> target;
};
LoadedProgram program_from_json(const json& j);

json to_json(const Scenario& s);
// Throws FormatError on schema problems; manifold and class validity are left
// to the geometry and fields constructors.
Scenario scenario_from_json(const json& j);

json to_json(const SolveReport& r, const Manifold& M);
json to_json(const StructureReport& r);
json to_json(const RoundtripReport& r);
json to_json(const OracleReport& r);

json read_json(const std::string& path);
// Writes to a sibling temporary file and renames it over `path`.
void write_text_atomic(const std::string& path, const std::string& text);
void write_json_atomic(const std::string& path, const json& j);

}  // namespace flowmatch::io
