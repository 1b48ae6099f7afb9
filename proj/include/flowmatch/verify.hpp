#pragma once

#include "flowmatch/flow.hpp"

#include <cstdint>
#include <vector>

namespace flowmatch {

// Sample points for a posteriori checks: the anchors (typically the
// configuration points), points inside stage support balls, and uniform
// background points.
struct SampleSet {
  std::vector<Vec> points;
  std::size_t anchors = 0;
  std::size_t in_support = 0;
  std::size_t background = 0;
};

SampleSet structure_samples(const DiffeoProgram& prog, const std::vector<Vec>& anchors,
                            std::size_t count, std::uint64_t seed);

// Per-sample structure defect of a map with Jacobian J at p, image f(p):
//   symplectic  ||J^T Omega J - Omega||_max
//   volume      |det J - 1|
//   contact     ||J^T alpha_{f(p)} - lambda alpha_p|| / ||alpha_p||,
//               lambda = <J^T alpha_{f(p)}, alpha_p> / <alpha_p, alpha_p>
//   none        0
struct PointDefect {
  double defect = 0;
  double lambda = 1;
};

PointDefect pointwise_defect(const Manifold& M, const Mat& J, const Vec& p, const Vec& image);

struct StructureReport {
  Structure structure = Structure::none;
  std::size_t samples = 0;
  double max_defect = 0;
  double lambda_min = 1;  // contact only
  double lambda_max = 1;
  double h = 0;
  double tol = 0;
  bool lambda_out_of_model = false;  // some lambda <= 0
  bool pass = false;
};

StructureReport check_structure(const DiffeoProgram& prog, const std::vector<Vec>& samples,
                                double h, double tol);

struct OracleReport {
  FieldClass cls = FieldClass::general;
  std::size_t samples = 0;
  double max_discrepancy = 0;
  double max_alpha_residual = 0;  // contact: |alpha(X) - f|
  double tol = 0;
  bool pass = false;
};

// Re-derives X from its generator at each sample by the defining linear
// algebra and compares with the closed-form value:
//   hamiltonian      solve i_X sigma = df, df by central differences
//   contact          solve alpha(X) = f, i_X d(alpha) + df = mu alpha for (X, mu)
//   divergence_free  central-difference divergence (reported as discrepancy)
// Throws std::invalid_argument for the general class (no generator).
OracleReport oracle_field_check(const VectorField& X, const std::vector<Vec>& samples, double tol,
                                double h = 1e-5);

struct RoundtripReport {
  std::size_t samples = 0;
  double max_residual = 0;
  double tol = 0;
  bool pass = false;
};

RoundtripReport roundtrip_check(const DiffeoProgram& prog, const std::vector<Vec>& samples,
                                double tol);

}  // namespace flowmatch
