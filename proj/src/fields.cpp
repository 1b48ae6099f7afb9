#include "flowmatch/fields.hpp"

#include "flowmatch/forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace flowmatch {

std::string to_string(FieldClass c) {
  switch (c) {
    case FieldClass::general: return "general";
    case FieldClass::hamiltonian: return "hamiltonian";
    case FieldClass::divergence_free: return "divergence_free";
    case FieldClass::contact: return "contact";
  }
  return "general";
}

FieldClass field_class_from_string(const std::string& s) {
  if (s == "general") return FieldClass::general;
  if (s == "hamiltonian") return FieldClass::hamiltonian;
  if (s == "divergence_free") return FieldClass::divergence_free;
  if (s == "contact") return FieldClass::contact;
  throw std::invalid_argument("unknown field class '" + s + "'");
}

bool compatible(FieldClass c, Structure s) {
  switch (c) {
    case FieldClass::general: return true;
    case FieldClass::hamiltonian: return s == Structure::symplectic;
    case FieldClass::divergence_free: return s == Structure::volume;
    case FieldClass::contact: return s == Structure::contact;
  }
  return false;
}

void require_compatible(FieldClass c, const Manifold& M) {
  if (!compatible(c, M.structure()))
    throw std::invalid_argument("field class " + to_string(c) + " is incompatible with " +
                                to_string(M.structure()) + " structure");
}

Mat symplectic_matrix(const Manifold& M) {
  if (M.structure() != Structure::symplectic)
    throw std::invalid_argument("symplectic_matrix needs a symplectic manifold");
  const int d = M.half_dim();
  Mat omega = Mat::Zero(2 * d, 2 * d);
  omega.topRightCorner(d, d).setIdentity();
  omega.bottomLeftCorner(d, d) = -Mat::Identity(d, d);
  return omega;
}

Vec contact_form(const Manifold& M, const Vec& x) {
  if (M.structure() != Structure::contact)
    throw std::invalid_argument("contact_form needs a contact manifold");
  const int d = M.half_dim();
  Vec alpha = Vec::Zero(2 * d + 1);
  for (int i = 0; i < d; ++i) alpha[i] = -x[d + i];
  alpha[2 * d] = 1.0;
  return alpha;
}

Mat contact_form_differential(const Manifold& M) {
  if (M.structure() != Structure::contact)
    throw std::invalid_argument("contact_form_differential needs a contact manifold");
  const int d = M.half_dim();
  Mat da = Mat::Zero(2 * d + 1, 2 * d + 1);
  da.block(0, d, d, d).setIdentity();
  da.block(d, 0, d, d) = -Mat::Identity(d, d);
  return da;
}

Vec reeb_vector(const Manifold& M) {
  if (M.structure() != Structure::contact)
    throw std::invalid_argument("reeb_vector needs a contact manifold");
  return Vec::Unit(M.dim(), M.dim() - 1);
}

Vec hamiltonian_vector(const Manifold& M, const Vec& df) {
  if (M.structure() != Structure::symplectic)
    throw std::invalid_argument("hamiltonian_vector needs a symplectic manifold");
  const int d = M.half_dim();
  Vec X(2 * d);
  for (int i = 0; i < d; ++i) {
    X[i] = df[d + i];
    X[d + i] = -df[i];
  }
  return X;
}

Vec contact_vector(const Manifold& M, const Vec& x, double f, const Vec& df) {
  if (M.structure() != Structure::contact)
    throw std::invalid_argument("contact_vector needs a contact manifold");
  const int d = M.half_dim();
  const double fz = df[2 * d];
  Vec X(2 * d + 1);
  double z = f;
  for (int i = 0; i < d; ++i) {
    const double y = x[d + i];
    X[i] = -df[d + i];
    X[d + i] = df[i] + y * fz;
    z -= y * df[d + i];
  }
  X[2 * d] = z;
  return X;
}

Mat divfree_curl_map(int dim, const Mat& extension, int sign) {
  if (extension.rows() != dim || extension.cols() != dim - 1)
    throw std::invalid_argument("divfree extension must be m x (m-1)");
  forms::Form omega = forms::Form::scalar(dim, 1.0);
  for (int j = 1; j < dim - 1; ++j)
    omega = forms::wedge(omega, forms::Form::one_form(extension.col(j)));
  const double parity = (dim % 2 == 0) ? -1.0 : 1.0;  // (-1)^{m+1}
  Mat W(dim, dim);
  for (int a = 0; a < dim; ++a) {
    const forms::Form d_beta = forms::wedge(forms::Form::one_form(Vec::Unit(dim, a)), omega);
    W.col(a) = (parity * sign) * forms::hodge_star(d_beta).as_vector();
  }
  return W;
}

Mat orthonormal_extension(const Vec& unit) {
  const int m = static_cast<int>(unit.size());
  int axis = -1;
  int nonzero = 0;
  for (int i = 0; i < m; ++i)
    if (unit[i] != 0.0) {
      ++nonzero;
      axis = i;
    }
  Mat ext(m, m - 1);
  if (nonzero == 1 && std::abs(unit[axis]) == 1.0) {
    int col = 0;
    for (int i = 0; i < m; ++i)
      if (i != axis) ext.col(col++) = Vec::Unit(m, i);
    return ext;
  }
  Eigen::HouseholderQR<Mat> qr(unit);
  const Mat Q = qr.householderQ() * Mat::Identity(m, m);
  return Q.rightCols(m - 1);
}

// ---------------------------------------------------------------------------

namespace {

struct LocalBump {
  bool inside;
  Vec d;        // wrapped offset from center
  double phi;
  Vec grad_phi;  // gradient of phi(|d| / r)
};

LocalBump local_bump(const Manifold& M, const Vec& center, double radius, BumpProfile profile,
                     const Vec& x) {
  LocalBump b{false, M.wrap(x - center), 0.0, Vec()};
  const double s = b.d.norm() / radius;
  if (s >= 1.0) return b;
  b.inside = true;
  b.phi = profile.eval(s).value;
  b.grad_phi = (profile.derivative_over_s(s) / (radius * radius)) * b.d;
  return b;
}

Vec hamiltonian_covector(const Manifold& M, const Vec& Y) {
  const int d = M.half_dim();
  Vec a(2 * d);
  for (int i = 0; i < d; ++i) {
    a[i] = -Y[d + i];
    a[d + i] = Y[i];
  }
  return a;
}

void require_unit(const Vec& Y, int dim) {
  if (Y.size() != dim) throw std::invalid_argument("direction has wrong dimension");
  if (std::abs(Y.norm() - 1.0) > 1e-12) throw std::invalid_argument("direction must be a unit vector");
}

void require_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("bump radius must be positive");
}

double default_scale(double scale, double unit_bound) {
  return scale > 0.0 ? scale : 1.0 / unit_bound;
}

}  // namespace

VectorField VectorField::from_parts(FieldClass cls, const Manifold& M, Point center,
                                    double radius, Vec direction, BumpProfile profile,
                                    double scale, GeneratorData generator) {
  require_compatible(cls, M);
  require_radius(radius);
  if (center.dim() != M.dim()) throw std::invalid_argument("center has wrong dimension");
  require_unit(direction, M.dim());
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("field scale must be positive");
  VectorField X;
  X.cls_ = cls;
  X.manifold_ = M;
  X.center_ = std::move(center);
  X.radius_ = radius;
  X.direction_ = std::move(direction);
  X.profile_ = profile;
  X.scale_ = scale;
  X.gen_ = std::move(generator);
  X.finalize();
  return X;
}

void VectorField::finalize() {
  const int m = manifold_.dim();
  switch (cls_) {
    case FieldClass::general: break;
    case FieldClass::hamiltonian:
    case FieldClass::contact:
      if (gen_.covector.size() != m) throw std::invalid_argument("generator covector has wrong dimension");
      break;
    case FieldClass::divergence_free:
      if (gen_.sign != 1 && gen_.sign != -1) throw std::invalid_argument("divfree sign must be +-1");
      curl_map_ = divfree_curl_map(m, gen_.extension, gen_.sign);
      break;
  }
  unit_bound_ = unit_sup_bound(cls_, manifold_, center_, direction_, radius_, profile_);
}

bool VectorField::vanishes_at(const Vec& x) const {
  return distance(manifold_, x, center_.coords) >= radius_;
}

bool VectorField::vanishes_at(const double* x) const {
  const int m = manifold_.dim();
  return vanishes_at(Vec(Eigen::Map<const Vec>(x, m)));
}

Vec VectorField::operator()(const Vec& x) const {
  const int m = manifold_.dim();
  const LocalBump b = local_bump(manifold_, center_.coords, radius_, profile_, x);
  if (!b.inside) return Vec::Zero(m);
  switch (cls_) {
    case FieldClass::general:
      return (scale_ * b.phi) * direction_;
    case FieldClass::hamiltonian: {
      const double g = gen_.covector.dot(b.d);
      const Vec grad = scale_ * (b.phi * gen_.covector + g * b.grad_phi);
      return hamiltonian_vector(manifold_, grad);
    }
    case FieldClass::divergence_free: {
      const Vec u2 = gen_.extension.col(0);
      const double g = u2.dot(b.d);
      const Vec grad = b.phi * u2 + g * b.grad_phi;
      return scale_ * (curl_map_ * grad);
    }
    case FieldClass::contact: {
      const double h = gen_.offset + gen_.covector.dot(b.d);
      const double f = scale_ * (b.phi * h);
      const Vec grad = scale_ * (b.phi * gen_.covector + h * b.grad_phi);
      return contact_vector(manifold_, x, f, grad);
    }
  }
  return Vec::Zero(m);
}

void VectorField::evaluate_into(const double* x, double* out) const {
  const int m = manifold_.dim();
  Eigen::Map<Vec>(out, m) = (*this)(Vec(Eigen::Map<const Vec>(x, m)));
}

Tangent VectorField::evaluate(const Point& p) const { return Tangent{(*this)(p.coords), p}; }

double VectorField::generator(const Vec& x) const {
  const LocalBump b = local_bump(manifold_, center_.coords, radius_, profile_, x);
  if (!b.inside) return 0.0;
  switch (cls_) {
    case FieldClass::general: return 0.0;
    case FieldClass::hamiltonian: return scale_ * b.phi * gen_.covector.dot(b.d);
    case FieldClass::divergence_free: return b.phi * gen_.extension.col(0).dot(b.d);
    case FieldClass::contact: return scale_ * b.phi * (gen_.offset + gen_.covector.dot(b.d));
  }
  return 0.0;
}

Vec VectorField::generator_gradient(const Vec& x) const {
  const int m = manifold_.dim();
  const LocalBump b = local_bump(manifold_, center_.coords, radius_, profile_, x);
  if (!b.inside || cls_ == FieldClass::general) return Vec::Zero(m);
  switch (cls_) {
    case FieldClass::hamiltonian:
      return scale_ * (b.phi * gen_.covector + gen_.covector.dot(b.d) * b.grad_phi);
    case FieldClass::divergence_free: {
      const Vec u2 = gen_.extension.col(0);
      return b.phi * u2 + u2.dot(b.d) * b.grad_phi;
    }
    case FieldClass::contact: {
      const double h = gen_.offset + gen_.covector.dot(b.d);
      return scale_ * (b.phi * gen_.covector + h * b.grad_phi);
    }
    default: break;
  }
  return Vec::Zero(m);
}

VectorField VectorField::rescaled(double scale) const {
  if (!(scale > 0.0)) throw std::invalid_argument("field scale must be positive");
  VectorField X = *this;
  X.scale_ = scale;
  return X;
}

bool VectorField::operator==(const VectorField& o) const {
  return cls_ == o.cls_ && manifold_ == o.manifold_ && center_.coords == o.center_.coords &&
         radius_ == o.radius_ && direction_ == o.direction_ && profile_ == o.profile_ &&
         scale_ == o.scale_ && gen_.covector.size() == o.gen_.covector.size() &&
         (gen_.covector.size() == 0 || gen_.covector == o.gen_.covector) &&
         gen_.offset == o.gen_.offset && gen_.sign == o.gen_.sign &&
         gen_.extension.rows() == o.gen_.extension.rows() &&
         gen_.extension.cols() == o.gen_.extension.cols() &&
         (gen_.extension.size() == 0 || gen_.extension == o.gen_.extension);
}

double unit_sup_bound(FieldClass cls, const Manifold& M, const Point& center, const Vec& direction,
                      double radius, BumpProfile profile) {
  switch (cls) {
    case FieldClass::general: return 1.0;
    case FieldClass::hamiltonian:
    case FieldClass::divergence_free: return 1.0 + profile.c_phi();
    case FieldClass::contact: {
      // |grad f| <= |a|(1 + C_phi) + |f0| max|phi'| / r;  |f| <= |f0| + |a| r;
      // |X| <= |f| + 2 |grad f| (1 + max |y|) on the support.
      const int d = M.half_dim();
      double f0 = direction[2 * d];
      for (int i = 0; i < d; ++i) f0 -= center.coords[d + i] * direction[i];
      const double a_norm = std::sqrt(direction.head(2 * d).squaredNorm());
      const double y_max = center.coords.segment(d, d).norm() + radius;
      const double F = std::abs(f0) + a_norm * radius;
      const double G = a_norm * (1.0 + profile.c_phi()) + std::abs(f0) * profile.max_slope() / radius;
      return std::max(1.0, F + 2.0 * G * (1.0 + y_max));
    }
  }
  return 1.0;
}

VectorField make_general_field(const Manifold& M, const Point& center, const Vec& direction,
                               double radius, BumpProfile profile, double scale) {
  require_radius(radius);
  require_unit(direction, M.dim());
  return VectorField::from_parts(FieldClass::general, M, canonicalize(M, center.coords), radius,
                                 direction, profile, scale, GeneratorData{});
}

VectorField make_hamiltonian_bump(const Manifold& M, const Point& center, const Vec& direction,
                                  double radius, BumpProfile profile, double scale) {
  require_compatible(FieldClass::hamiltonian, M);
  require_unit(direction, M.dim());
  GeneratorData gen;
  gen.covector = hamiltonian_covector(M, direction);
  const double s = default_scale(scale, 1.0 + profile.c_phi());
  return VectorField::from_parts(FieldClass::hamiltonian, M, canonicalize(M, center.coords), radius,
                                 direction, profile, s, std::move(gen));
}

VectorField make_divfree_bump(const Manifold& M, const Point& center, const Vec& direction,
                              double radius, BumpProfile profile, double scale) {
  require_compatible(FieldClass::divergence_free, M);
  require_unit(direction, M.dim());
  const int m = M.dim();
  GeneratorData gen;
  gen.extension = orthonormal_extension(direction);
  // At the center d(psi) = u_2, so X(c) = W u_2, which is +-direction.
  const Vec at_center = divfree_curl_map(m, gen.extension, 1) * gen.extension.col(0);
  gen.sign = at_center.dot(direction) >= 0.0 ? 1 : -1;
  if ((gen.sign * at_center - direction).norm() > 1e-9)
    throw std::logic_error("divergence-free construction is not parallel to its direction");
  const double s = default_scale(scale, 1.0 + profile.c_phi());
  return VectorField::from_parts(FieldClass::divergence_free, M, canonicalize(M, center.coords),
                                 radius, direction, profile, s, std::move(gen));
}

VectorField make_contact_bump(const Manifold& M, const Point& center, const Vec& direction,
                              double radius, BumpProfile profile, double scale) {
  require_compatible(FieldClass::contact, M);
  require_unit(direction, M.dim());
  const int d = M.half_dim();
  const Point c = canonicalize(M, center.coords);
  // Jet conditions X(c) = Y with a_z = 0:
  //   a_{y_i} = -Y_{x_i},  a_{x_i} = Y_{y_i},  f0 = Y_z - sum c_{y_i} Y_{x_i}.
  GeneratorData gen;
  gen.covector = Vec::Zero(2 * d + 1);
  double f0 = direction[2 * d];
  for (int i = 0; i < d; ++i) {
    gen.covector[i] = direction[d + i];
    gen.covector[d + i] = -direction[i];
    f0 -= c.coords[d + i] * direction[i];
  }
  gen.offset = f0;
  const double s =
      default_scale(scale, unit_sup_bound(FieldClass::contact, M, c, direction, radius, profile));
  return VectorField::from_parts(FieldClass::contact, M, c, radius, direction, profile, s,
                                 std::move(gen));
}

VectorField make_bump(FieldClass cls, const Manifold& M, const Point& center, const Vec& direction,
                      double radius, BumpProfile profile, double scale) {
  switch (cls) {
    case FieldClass::general: return make_general_field(M, center, direction, radius, profile, scale);
    case FieldClass::hamiltonian: return make_hamiltonian_bump(M, center, direction, radius, profile, scale);
    case FieldClass::divergence_free: return make_divfree_bump(M, center, direction, radius, profile, scale);
    case FieldClass::contact: return make_contact_bump(M, center, direction, radius, profile, scale);
  }
  throw std::invalid_argument("unknown field class");
}

// ---------------------------------------------------------------------------

double family_radius(const Configuration& c, const Manifold& M, const FamilyOptions& opts) {
  double r = std::min(opts.radius_factor * separation(c, M), opts.max_radius);
  if (M.is_torus()) r = std::min(r, 0.25 * M.min_period());
  return r;
}

FieldFamily build_family(const Configuration& config, const Manifold& M, FieldClass cls,
                         const FamilyOptions& opts) {
  require_compatible(cls, M);
  if (config.size() == 0) throw std::invalid_argument("configuration is empty");
  if (!(opts.radius_factor > 0.0)) throw std::invalid_argument("radius_factor must be positive");
  if (!opts.allow_overlap && !(opts.radius_factor < 0.5))
    throw std::invalid_argument("radius_factor must be < 1/2 for disjoint supports");
  const auto n = config.size();
  const auto m = static_cast<std::size_t>(M.dim());
  if (n > std::numeric_limits<std::size_t>::max() / m)
    throw std::overflow_error("n * m overflows");
  const double sep = separation(config, M);
  if (!(sep > 0.0)) throw std::invalid_argument("configuration has zero separation");

  FieldFamily fam;
  fam.manifold = M;
  fam.cls = cls;
  fam.config = config;
  fam.radius = family_radius(config, M, opts);

  double bound = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (const Tangent& Y : frame(M, config[i]))
      bound = std::max(bound, unit_sup_bound(cls, M, config[i], Y.components, fam.radius, opts.profile));
  fam.scale = (cls == FieldClass::general) ? 1.0 : 1.0 / bound;

  fam.fields.reserve(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (const Tangent& Y : frame(M, config[i]))
      fam.fields.push_back(make_bump(cls, M, config[i], Y.components, fam.radius, opts.profile, fam.scale));

  fam.certificate = check_conditions9(fam, 0.0, 0);
  return fam;
}

namespace {

// Grid over the cube [-r, r]^m clipped to the ball; about `count` cube points.
std::vector<Vec> ball_grid(const Vec& center, double radius, std::size_t count) {
  const int m = static_cast<int>(center.size());
  const auto per_axis = static_cast<std::size_t>(
      std::max(2.0, std::ceil(std::pow(static_cast<double>(count), 1.0 / m))));
  std::vector<Vec> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
  const double h = 2.0 * radius / static_cast<double>(per_axis - 1);
  while (true) {
    Vec off(m);
    for (int a = 0; a < m; ++a) off[a] = -radius + h * static_cast<double>(idx[static_cast<std::size_t>(a)]);
    if (off.norm() < radius) out.push_back(center + off);
    int a = 0;
    while (a < m && ++idx[static_cast<std::size_t>(a)] == per_axis) idx[static_cast<std::size_t>(a++)] = 0;
    if (a == m) break;
  }
  return out;
}

}  // namespace

Conditions9Report check_conditions9(const FieldFamily& family, double epsilon,
                                    std::size_t samples_per_ball) {
  const Manifold& M = family.manifold;
  const auto m = static_cast<std::size_t>(M.dim());
  const auto n = family.config.size();
  Conditions9Report rep;
  rep.epsilon = epsilon;
  for (std::size_t k = 0; k < family.fields.size(); ++k) {
    const VectorField& X = family.fields[k];
    const std::size_t owner = k / m;
    const std::size_t j = k % m;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec v = X(family.config[i].coords);
      if (i == owner) {
        const Vec target = family.scale * Vec::Unit(M.dim(), static_cast<int>(j));
        rep.max_center_error = std::max(rep.max_center_error, (v - target).norm());
      } else {
        rep.max_cross_error = std::max(rep.max_cross_error, v.norm());
      }
    }
    rep.sup_bound = std::max(rep.sup_bound, X.sup_bound());
    if (samples_per_ball > 0)
      for (const Vec& x : ball_grid(X.center().coords, X.radius(), samples_per_ball))
        rep.sampled_sup = std::max(rep.sampled_sup, X(x).norm());
  }
  // Exact construction: errors are compared with <= so epsilon = 0 is meaningful.
  rep.pass = rep.max_center_error <= epsilon && rep.max_cross_error <= epsilon &&
             rep.sup_bound < 2.0 && rep.sampled_sup < 2.0;
  return rep;
}

}  // namespace flowmatch
