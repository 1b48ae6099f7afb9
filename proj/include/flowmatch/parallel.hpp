#pragma once

// Data-parallel kernels over independent sample points.  Each kernel has an
// OpenMP version and a serial reference; both compute every element with the
// same arithmetic, so their outputs are identical element by element.

#include "flowmatch/flow.hpp"
#include "flowmatch/verify.hpp"

#include <vector>

namespace flowmatch::kernels {

// Raw images apply_raw(prog, p).
std::vector<Vec> map_points_serial(const DiffeoProgram& prog, const std::vector<Vec>& pts);
std::vector<Vec> map_points_omp(const DiffeoProgram& prog, const std::vector<Vec>& pts);

std::vector<PointDefect> structure_defects_serial(const DiffeoProgram& prog,
                                                  const std::vector<Vec>& pts, double h);
std::vector<PointDefect> structure_defects_omp(const DiffeoProgram& prog,
                                               const std::vector<Vec>& pts, double h);

// distance(inverse(prog(p)), p)
std::vector<double> roundtrip_serial(const DiffeoProgram& prog, const DiffeoProgram& inverse,
                                     const std::vector<Vec>& pts);
std::vector<double> roundtrip_omp(const DiffeoProgram& prog, const DiffeoProgram& inverse,
                                  const std::vector<Vec>& pts);

int max_threads();

}  // namespace flowmatch::kernels
