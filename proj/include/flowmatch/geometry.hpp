#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowmatch {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ManifoldKind { euclidean, flat_torus };
enum class Structure { none, symplectic, volume, contact };

std::string to_string(ManifoldKind k);
std::string to_string(Structure s);
ManifoldKind manifold_kind_from_string(const std::string& s);
Structure structure_from_string(const std::string& s);

// Euclidean R^m or a flat torus R^m / (periods Z^m), with the flat metric and
// at most one extra geometric structure in standard coordinates:
//   symplectic  sum dx_i ^ dy_i        coordinates (x_1..x_d, y_1..y_d)
//   volume      dx_1 ^ ... ^ dx_m
//   contact     dz - sum y_i dx_i      coordinates (x_1..x_d, y_1..y_d, z)
class Manifold {
 public:
  static Manifold euclidean(int dim, Structure structure = Structure::none);
  static Manifold torus(std::vector<double> periods, Structure structure = Structure::none);

  Manifold(ManifoldKind kind, int dim, Structure structure, std::vector<double> periods = {});

  ManifoldKind kind() const { return kind_; }
  int dim() const { return dim_; }
  Structure structure() const { return structure_; }
  const std::vector<double>& periods() const { return periods_; }
  bool is_torus() const { return kind_ == ManifoldKind::flat_torus; }

  // Half the symplectic/contact dimension: m = 2d or m = 2d + 1.
  int half_dim() const { return dim_ / 2; }

  // Shortest representative of a coordinate difference (identity on R^m).
  Vec wrap(const Vec& delta) const;
  double min_period() const;

  bool operator==(const Manifold&) const = default;

 private:
  ManifoldKind kind_;
  int dim_;
  Structure structure_;
  std::vector<double> periods_;
};

struct Point {
  Vec coords;

  int dim() const { return static_cast<int>(coords.size()); }
};

struct Tangent {
  Vec components;
  Point base;
};

Point canonicalize(const Manifold& M, std::span<const double> raw);
Point canonicalize(const Manifold& M, const Vec& raw);

double distance(const Manifold& M, const Point& p, const Point& q);
double distance(const Manifold& M, const Vec& p, const Vec& q);

// Displacement from `from` to `to` along the shortest geodesic.
Vec displacement(const Manifold& M, const Vec& from, const Vec& to);

// Orthonormal frame at p; the flat metric makes this the standard basis.
std::vector<Tangent> frame(const Manifold& M, const Point& p);

constexpr double kUnbounded = std::numeric_limits<double>::infinity();

class InvalidConfiguration : public std::invalid_argument {
 public:
  InvalidConfiguration(const std::string& what, std::size_t i, std::size_t j)
      : std::invalid_argument(what), first(i), second(j) {}
  std::size_t first;
  std::size_t second;
};

// Ordered n-tuple of pairwise distinct points, an element of M^(n).
class Configuration {
 public:
  Configuration() = default;

  // Canonicalizes every point; throws InvalidConfiguration naming the first
  // coincident pair.
  static Configuration make(const Manifold& M, std::vector<Point> points);
  static Configuration from_coords(const Manifold& M,
                                   const std::vector<std::vector<double>>& coords);

  std::size_t size() const { return points_.size(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const { return points_; }

 private:
  explicit Configuration(std::vector<Point> pts) : points_(std::move(pts)) {}
  std::vector<Point> points_;
};

// min_{i<j} distance(x_i, x_j); kUnbounded for n = 1.
double separation(const Configuration& c, const Manifold& M);
double separation(const std::vector<Vec>& pts, const Manifold& M);

// max_i distance(a_i, b_i)
double max_pointwise_distance(const Manifold& M, const Configuration& a, const Configuration& b);

}  // namespace flowmatch
