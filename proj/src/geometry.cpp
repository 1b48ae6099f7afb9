#include "flowmatch/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace flowmatch {

std::string to_string(ManifoldKind k) {
  return k == ManifoldKind::euclidean ? "euclidean" : "flat_torus";
}

std::string to_string(Structure s) {
  switch (s) {
    case Structure::none: return "none";
    case Structure::symplectic: return "symplectic";
    case Structure::volume: return "volume";
    case Structure::contact: return "contact";
  }
  return "none";
}

ManifoldKind manifold_kind_from_string(const std::string& s) {
  if (s == "euclidean") return ManifoldKind::euclidean;
  if (s == "flat_torus" || s == "torus") return ManifoldKind::flat_torus;
  throw std::invalid_argument("unknown manifold kind '" + s + "'");
}

Structure structure_from_string(const std::string& s) {
  if (s == "none") return Structure::none;
  if (s == "symplectic") return Structure::symplectic;
  if (s == "volume") return Structure::volume;
  if (s == "contact") return Structure::contact;
  throw std::invalid_argument("unknown structure '" + s + "'");
}

Manifold Manifold::euclidean(int dim, Structure structure) {
  return Manifold(ManifoldKind::euclidean, dim, structure);
}

Manifold Manifold::torus(std::vector<double> periods, Structure structure) {
  const int dim = static_cast<int>(periods.size());
  return Manifold(ManifoldKind::flat_torus, dim, structure, std::move(periods));
}

Manifold::Manifold(ManifoldKind kind, int dim, Structure structure, std::vector<double> periods)
    : kind_(kind), dim_(dim), structure_(structure), periods_(std::move(periods)) {
  if (dim_ < 2) throw std::invalid_argument("manifold dimension must be >= 2");
  if (structure_ == Structure::symplectic && dim_ % 2 != 0)
    throw std::invalid_argument("symplectic structure needs even dimension");
  if (structure_ == Structure::contact) {
    if (dim_ % 2 == 0 || dim_ < 3)
      throw std::invalid_argument("contact structure needs odd dimension >= 3");
    if (kind_ != ManifoldKind::euclidean)
      throw std::invalid_argument("contact structure is only supported on euclidean space");
  }
  if (kind_ == ManifoldKind::flat_torus) {
    if (periods_.empty()) periods_.assign(static_cast<std::size_t>(dim_), 1.0);
    if (static_cast<int>(periods_.size()) != dim_)
      throw std::invalid_argument("torus needs one period per dimension");
    for (double p : periods_)
      if (!(p > 0.0) || !std::isfinite(p))
        throw std::invalid_argument("torus periods must be positive and finite");
  } else {
    periods_.clear();
  }
}

Vec Manifold::wrap(const Vec& delta) const {
  if (kind_ == ManifoldKind::euclidean) return delta;
  Vec out = delta;
  for (int i = 0; i < dim_; ++i) {
    const double p = periods_[static_cast<std::size_t>(i)];
    out[i] = delta[i] - p * std::round(delta[i] / p);
  }
  return out;
}

double Manifold::min_period() const {
  if (periods_.empty()) return kUnbounded;
  return *std::min_element(periods_.begin(), periods_.end());
}

Point canonicalize(const Manifold& M, std::span<const double> raw) {
  if (static_cast<int>(raw.size()) != M.dim()) {
    std::ostringstream os;
    os << "point has " << raw.size() << " coordinates, manifold dimension is " << M.dim();
    throw std::invalid_argument(os.str());
  }
  Vec v(M.dim());
  for (int i = 0; i < M.dim(); ++i) {
    double x = raw[static_cast<std::size_t>(i)];
    if (!std::isfinite(x)) throw std::invalid_argument("point coordinate is not finite");
    if (M.is_torus()) {
      const double p = M.periods()[static_cast<std::size_t>(i)];
      x = std::fmod(x, p);
      if (x < 0.0) x += p;
      if (x >= p) x = 0.0;
    }
    v[i] = x;
  }
  return Point{std::move(v)};
}

Point canonicalize(const Manifold& M, const Vec& raw) {
  return canonicalize(M, std::span<const double>(raw.data(), static_cast<std::size_t>(raw.size())));
}

Vec displacement(const Manifold& M, const Vec& from, const Vec& to) {
  return M.wrap(to - from);
}

double distance(const Manifold& M, const Vec& p, const Vec& q) {
  if (!M.is_torus()) return (p - q).norm();
  double sum = 0.0;
  for (int i = 0; i < M.dim(); ++i) {
    const double per = M.periods()[static_cast<std::size_t>(i)];
    double d = std::fmod(std::abs(p[i] - q[i]), per);
    d = std::min(d, per - d);
    sum += d * d;
  }
  return std::sqrt(sum);
}

double distance(const Manifold& M, const Point& p, const Point& q) {
  return distance(M, p.coords, q.coords);
}

std::vector<Tangent> frame(const Manifold& M, const Point& p) {
  std::vector<Tangent> out;
  out.reserve(static_cast<std::size_t>(M.dim()));
  for (int j = 0; j < M.dim(); ++j) out.push_back(Tangent{Vec::Unit(M.dim(), j), p});
  return out;
}

Configuration Configuration::make(const Manifold& M, std::vector<Point> points) {
  for (auto& p : points) p = canonicalize(M, p.coords);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (distance(M, points[i], points[j]) == 0.0) {
        std::ostringstream os;
        os << "points " << i << " and " << j << " coincide";
        throw InvalidConfiguration(os.str(), i, j);
      }
  return Configuration(std::move(points));
}

Configuration Configuration::from_coords(const Manifold& M,
                                         const std::vector<std::vector<double>>& coords) {
  std::vector<Point> pts;
  pts.reserve(coords.size());
  for (const auto& c : coords) pts.push_back(canonicalize(M, std::span<const double>(c)));
  return make(M, std::move(pts));
}

double separation(const std::vector<Vec>& pts, const Manifold& M) {
  double best = kUnbounded;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::min(best, distance(M, pts[i], pts[j]));
  return best;
}

double separation(const Configuration& c, const Manifold& M) {
  double best = kUnbounded;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j)
      best = std::min(best, distance(M, c[i], c[j]));
  return best;
}

double max_pointwise_distance(const Manifold& M, const Configuration& a, const Configuration& b) {
  if (a.size() != b.size()) throw std::invalid_argument("configurations differ in size");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, distance(M, a[i], b[i]));
  return worst;
}

}  // namespace flowmatch
