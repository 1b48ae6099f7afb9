#include "flowmatch/parallel.hpp"

#include <omp.h>

#include <exception>

namespace flowmatch::kernels {

namespace {

PointDefect defect_at(const DiffeoProgram& prog, const Vec& p, double h) {
  const JacobianResult jr = jacobian_and_image(prog, p, h);
  return pointwise_defect(prog.manifold, jr.jacobian, p, jr.image);
}

double roundtrip_at(const DiffeoProgram& prog, const DiffeoProgram& inverse, const Vec& p) {
  return distance(prog.manifold, apply_raw(inverse, apply_raw(prog, p)), p);
}

// Exceptions must not cross the OpenMP region boundary; the first one is
// rethrown after the loop.
template <class Body>
void omp_for(long count, Body&& body) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(flowmatch_kernel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<Vec> map_points_serial(const DiffeoProgram& prog, const std::vector<Vec>& pts) {
  std::vector<Vec> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = apply_raw(prog, pts[i]);
  return out;
}

std::vector<Vec> map_points_omp(const DiffeoProgram& prog, const std::vector<Vec>& pts) {
  std::vector<Vec> out(pts.size());
  omp_for(static_cast<long>(pts.size()), [&](std::size_t i) { out[i] = apply_raw(prog, pts[i]); });
  return out;
}

std::vector<PointDefect> structure_defects_serial(const DiffeoProgram& prog,
                                                  const std::vector<Vec>& pts, double h) {
  std::vector<PointDefect> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = defect_at(prog, pts[i], h);
  return out;
}

std::vector<PointDefect> structure_defects_omp(const DiffeoProgram& prog,
                                               const std::vector<Vec>& pts, double h) {
  std::vector<PointDefect> out(pts.size());
  omp_for(static_cast<long>(pts.size()), [&](std::size_t i) { out[i] = defect_at(prog, pts[i], h); });
  return out;
}

std::vector<double> roundtrip_serial(const DiffeoProgram& prog, const DiffeoProgram& inverse,
                                     const std::vector<Vec>& pts) {
  std::vector<double> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = roundtrip_at(prog, inverse, pts[i]);
  return out;
}

std::vector<double> roundtrip_omp(const DiffeoProgram& prog, const DiffeoProgram& inverse,
                                  const std::vector<Vec>& pts) {
  std::vector<double> out(pts.size());
  omp_for(static_cast<long>(pts.size()),
          [&](std::size_t i) { out[i] = roundtrip_at(prog, inverse, pts[i]); });
  return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace flowmatch::kernels
