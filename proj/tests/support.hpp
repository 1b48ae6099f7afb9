#pragma once

// Hand-rolled generators shared by the property tests.

#include "flowmatch/fields.hpp"

#include <random>
#include <vector>

namespace flowmatch::testing {

inline Vec random_vec(std::mt19937_64& rng, int m, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(m);
  for (int a = 0; a < m; ++a) v[a] = u(rng);
  return v;
}

inline Vec random_unit(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(m);
  for (int a = 0; a < m; ++a) v[a] = g(rng);
  return v / v.norm();
}

// Rejection-sampled points with pairwise distance >= min_sep, in [-1,1]^m on
// euclidean space and over the whole fundamental domain on a torus.
inline std::vector<std::vector<double>> random_points(std::mt19937_64& rng, const Manifold& M,
                                                      std::size_t n, double min_sep) {
  const int m = M.dim();
  std::vector<Vec> pts;
  while (pts.size() < n) {
    Vec p(m);
    if (M.is_torus()) {
      for (int a = 0; a < m; ++a)
        p[a] = std::uniform_real_distribution<double>(0.0, M.periods()[static_cast<std::size_t>(a)])(rng);
    } else {
      p = random_vec(rng, m, -1.0, 1.0);
    }
    bool ok = true;
    for (const Vec& q : pts) ok = ok && distance(M, p, q) >= min_sep;
    if (ok) pts.push_back(p);
  }
  std::vector<std::vector<double>> out;
  for (const Vec& p : pts) out.emplace_back(p.data(), p.data() + p.size());
  return out;
}

inline Configuration random_configuration(std::mt19937_64& rng, const Manifold& M, std::size_t n,
                                          double min_sep) {
  return Configuration::from_coords(M, random_points(rng, M, n, min_sep));
}

// The manifold each class is exercised on.
inline Manifold manifold_for(FieldClass cls, int dim, bool torus = false) {
  Structure s = Structure::none;
  switch (cls) {
    case FieldClass::general: s = Structure::none; break;
    case FieldClass::hamiltonian: s = Structure::symplectic; break;
    case FieldClass::divergence_free: s = Structure::volume; break;
    case FieldClass::contact: s = Structure::contact; break;
  }
  if (torus) return Manifold::torus(std::vector<double>(static_cast<std::size_t>(dim), 1.0), s);
  return Manifold::euclidean(dim, s);
}

inline std::vector<Vec> coords(const Configuration& c) {
  std::vector<Vec> out;
  for (const Point& p : c.points()) out.push_back(p.coords);
  return out;
}

}  // namespace flowmatch::testing
