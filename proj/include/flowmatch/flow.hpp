#pragma once

#include "flowmatch/fields.hpp"
#include "flowmatch/integrator.hpp"

#include <optional>
#include <vector>

namespace flowmatch {

struct Stage {
  VectorField field;
  double time;
};

// Fl^{X_1}_{t_1} o ... o Fl^{X_N}_{t_N}: stages[0] is applied last.
struct DiffeoProgram {
  Manifold manifold = Manifold::euclidean(2);
  std::vector<Stage> stages;
  IntegratorOptions options;

  std::size_t size() const { return stages.size(); }
  bool empty() const { return stages.empty(); }
};

// Fl^X_t(p).  Exact identity for t = 0 or p outside the support.
Point flow(const VectorField& X, const Point& p, double t, const IntegratorOptions& opts = {});

// Same, on raw coordinates without canonicalization (universal cover on a torus).
Vec flow_raw(const VectorField& X, const Vec& x, double t, const IntegratorOptions& opts);

// Flows several points together with one shared step-size sequence, so the
// result is a smooth function of the inputs (used for difference stencils).
// Rows of `pts` are points.
void flow_batch(const VectorField& X, Mat& pts, double t, const IntegratorOptions& opts);

Point apply(const DiffeoProgram& prog, const Point& p);
Vec apply_raw(const DiffeoProgram& prog, const Vec& x);

// Maps each point; throws InvalidConfiguration if two images collide.
Configuration apply_config(const DiffeoProgram& prog, const Configuration& c);

// Stages reversed with negated times.
DiffeoProgram invert(const DiffeoProgram& prog);

// Concatenation: the returned program applies `first`, then `second`.
DiffeoProgram then(const DiffeoProgram& first, const DiffeoProgram& second);

bool structurally_equal(const DiffeoProgram& a, const DiffeoProgram& b);

struct JacobianResult {
  Mat jacobian;
  Vec image;  // raw image of p
};

// Central-difference Jacobian of apply(prog, .) at p with step h; the stencil
// is integrated as one batch.
JacobianResult jacobian_and_image(const DiffeoProgram& prog, const Vec& p, double h);
Mat jacobian(const DiffeoProgram& prog, const Point& p, double h);

// The orbit map t -> (Fl^{X_1}_{t_1} o ... o Fl^{X_N}_{t_N})(x_i), i = 1..n.
DiffeoProgram family_program(const FieldFamily& family, const Vec& times,
                             const IntegratorOptions& opts = {});
Configuration eval_f(const FieldFamily& family, const Vec& times,
                     const IntegratorOptions& opts = {});

}  // namespace flowmatch
