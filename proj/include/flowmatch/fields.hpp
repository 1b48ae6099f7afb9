#pragma once

#include "flowmatch/bump.hpp"
#include "flowmatch/geometry.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace flowmatch {

enum class FieldClass { general, hamiltonian, divergence_free, contact };

std::string to_string(FieldClass c);
FieldClass field_class_from_string(const std::string& s);

// general works on any supported manifold; each structured class needs its
// own structure.
bool compatible(FieldClass c, Structure s);
void require_compatible(FieldClass c, const Manifold& M);

// ---------------------------------------------------------------------------
// Pointwise structure data in standard coordinates.

// Matrix of sigma = sum dx_i ^ dy_i, Omega(u, v) = u^T Omega v.
Mat symplectic_matrix(const Manifold& M);
// Components of alpha = dz - sum y_i dx_i at x.
Vec contact_form(const Manifold& M, const Vec& x);
// Matrix of d(alpha) = sum dx_i ^ dy_i on the contact manifold.
Mat contact_form_differential(const Manifold& M);
// The Reeb field d/dz: alpha(R) = 1, i_R d(alpha) = 0.
Vec reeb_vector(const Manifold& M);

// X with i_X sigma = df, i.e. X_{x_i} = df/dy_i, X_{y_i} = -df/dx_i.
Vec hamiltonian_vector(const Manifold& M, const Vec& df);

// Contact vector field grad^alpha(f) from f and df at x:
//   X_{x_i} = -f_{y_i},  X_{y_i} = f_{x_i} + y_i f_z,  X_z = f - sum y_i f_{y_i},
// so that alpha(X) = f and L_X alpha = f_z alpha.
Vec contact_vector(const Manifold& M, const Vec& x, double f, const Vec& df);

// Linear map sending d(psi) to (-1)^{m+1} * d(psi ^ omega) (flat metric, so the
// index raise is the identity), where omega = u_3 ^ ... ^ u_m is built from
// columns 1.. of `extension` (m x (m-1)).  Multiplied by `sign`.
Mat divfree_curl_map(int dim, const Mat& extension, int sign);

// Completes a unit vector to an orthonormal set; returns the m x (m-1) matrix of
// the added vectors.  Exact for signed coordinate axes.
Mat orthonormal_extension(const Vec& unit);

// ---------------------------------------------------------------------------

// Class-specific generator parameters; enough to rebuild the field exactly.
struct GeneratorData {
  Vec covector;        // hamiltonian, contact: a
  double offset = 0;   // contact: f0
  Mat extension;       // divergence_free: u_2..u_m as columns
  int sign = 1;        // divergence_free: orientation calibration
};

// Compactly supported bump field in one of the four classes.  Support is the
// closed ball of `radius` around `center`; the field is `scale` times the
// unit-normalized construction, so X(center) = scale * direction.
class VectorField {
 public:
  // Rebuilds derived quantities from stored parameters (used by file loading).
  static VectorField from_parts(FieldClass cls, const Manifold& M, Point center, double radius,
                                Vec direction, BumpProfile profile, double scale,
                                GeneratorData generator);

  FieldClass field_class() const { return cls_; }
  const Manifold& manifold() const { return manifold_; }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  const Vec& direction() const { return direction_; }
  BumpProfile profile() const { return profile_; }
  double scale() const { return scale_; }
  const GeneratorData& generator_data() const { return gen_; }

  // Evaluation at raw (possibly unwrapped) coordinates.
  Vec operator()(const Vec& x) const;
  void evaluate_into(const double* x, double* out) const;
  Tangent evaluate(const Point& p) const;

  bool vanishes_at(const Vec& x) const;
  bool vanishes_at(const double* x) const;

  // Scalar generator: Hamiltonian / contact function (scaled), or the stream
  // function phi <u_2, x - c> for the divergence-free class.  Zero for general.
  double generator(const Vec& x) const;
  Vec generator_gradient(const Vec& x) const;

  // Certified analytic bound on sup |X|_g.
  double sup_bound() const { return scale_ * unit_bound_; }
  double unit_bound() const { return unit_bound_; }

  // Same parameters with another scale.
  VectorField rescaled(double scale) const;

  bool operator==(const VectorField& o) const;

 private:
  VectorField() = default;
  void finalize();

  FieldClass cls_ = FieldClass::general;
  Manifold manifold_ = Manifold::euclidean(2);
  Point center_;
  double radius_ = 0;
  Vec direction_;
  BumpProfile profile_;
  double scale_ = 1;
  GeneratorData gen_;
  Mat curl_map_;       // divergence_free only
  double unit_bound_ = 1;
};

// Bound on sup|X| of the unscaled construction for a given center/direction.
double unit_sup_bound(FieldClass cls, const Manifold& M, const Point& center, const Vec& direction,
                      double radius, BumpProfile profile);

VectorField make_general_field(const Manifold& M, const Point& center, const Vec& direction,
                               double radius, BumpProfile profile = BumpProfile{},
                               double scale = 1.0);

// Default scales below are 1 / unit_sup_bound, giving sup|X| <= 1.
VectorField make_hamiltonian_bump(const Manifold& M, const Point& center, const Vec& direction,
                                  double radius, BumpProfile profile = BumpProfile{},
                                  double scale = 0.0);
VectorField make_divfree_bump(const Manifold& M, const Point& center, const Vec& direction,
                              double radius, BumpProfile profile = BumpProfile{},
                              double scale = 0.0);
VectorField make_contact_bump(const Manifold& M, const Point& center, const Vec& direction,
                              double radius, BumpProfile profile = BumpProfile{},
                              double scale = 0.0);

VectorField make_bump(FieldClass cls, const Manifold& M, const Point& center,
                      const Vec& direction, double radius, BumpProfile profile, double scale);

// ---------------------------------------------------------------------------

struct Conditions9Report {
  double max_center_error = 0;  // max |X_k(x_i) - c0 Y_ij|
  double max_cross_error = 0;   // max |X_k(x_i)| over k outside block i
  double sup_bound = 0;         // certified analytic bound on sup |X_k|
  double sampled_sup = 0;       // grid-sampled sup |X_k| (0 when not sampled)
  double epsilon = 0;
  bool pass = false;
};

struct FamilyOptions {
  double radius_factor = 0.25;
  double max_radius = 0.5;
  BumpProfile profile{};
  // Permits radius_factor >= 1/2 (overlapping supports); only for experiments.
  bool allow_overlap = false;
};

// Bump radius used for a configuration: radius_factor * separation, capped by
// max_radius and, on a torus, a quarter of the shortest period.
double family_radius(const Configuration& c, const Manifold& M, const FamilyOptions& opts);

struct FieldFamily {
  Manifold manifold = Manifold::euclidean(2);
  FieldClass cls = FieldClass::general;
  Configuration config;
  std::vector<VectorField> fields;  // k = i*m + j  (0-based) centred at x_i, direction e_j
  double scale = 1;                  // c0
  double radius = 0;
  Conditions9Report certificate;

  std::size_t size() const { return fields.size(); }
};

FieldFamily build_family(const Configuration& config, const Manifold& M, FieldClass cls,
                         const FamilyOptions& opts = {});

// Re-checks the three inequalities against c0 * frame.  `samples_per_ball`
// grid points per support ball for the sampled sup (0 skips sampling).
Conditions9Report check_conditions9(const FieldFamily& family, double epsilon,
                                    std::size_t samples_per_ball = 10000);

}  // namespace flowmatch
