#include "flowmatch/verify.hpp"
#include "flowmatch/solve.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace flowmatch;
using namespace flowmatch::testing;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::vector<Vec> ball_samples(std::mt19937_64& rng, const Vec& c, double r, int count) {
  const int m = static_cast<int>(c.size());
  std::vector<Vec> out;
  for (int k = 0; k < count; ++k)
    out.push_back(c + r * std::pow(std::uniform_real_distribution<double>(0, 1)(rng), 1.0 / m) * random_unit(rng, m));
  return out;
}

DiffeoProgram one_stage(const VectorField& X, double t) {
  DiffeoProgram p;
  p.manifold = X.manifold();
  p.stages.push_back({X, t});
  return p;
}

}  // namespace

TEST_CASE("empty program has zero defect for every structure") {
  std::mt19937_64 rng(51);
  for (Structure s : {Structure::none, Structure::symplectic, Structure::volume, Structure::contact}) {
    DiffeoProgram prog;
    prog.manifold = Manifold::euclidean(s == Structure::symplectic ? 4 : 3, s);
    std::vector<Vec> pts;
    for (int k = 0; k < 20; ++k) pts.push_back(random_vec(rng, prog.manifold.dim(), -2, 2));
    const auto rep = check_structure(prog, pts, 1e-5, 1e-10);
    CHECK(rep.max_defect <= 1e-10);
    CHECK(rep.pass);
    if (s == Structure::contact) {
      CHECK(rep.lambda_min == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(rep.lambda_max == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("check_structure validates its inputs") {
  DiffeoProgram prog;
  prog.manifold = Manifold::euclidean(2, Structure::symplectic);
  CHECK_THROWS_AS(check_structure(prog, {vec({0, 0})}, 0.0, 1e-5), std::invalid_argument);
  const auto X = make_general_field(Manifold::euclidean(2), Point{vec({0, 0})}, vec({1, 0}), 0.5);
  prog.stages.push_back({X, 0.1});
  CHECK_THROWS_AS(check_structure(prog, {vec({0, 0})}, 1e-5, 1e-5), std::invalid_argument);
}

TEST_CASE("pointwise defects against hand-built jacobians") {
  const Manifold S = Manifold::euclidean(2, Structure::symplectic);
  Mat shear(2, 2);
  shear << 1, 0.5, 0, 1;
  CHECK(pointwise_defect(S, shear, vec({0, 0}), vec({0, 0})).defect == 0.0);
  CHECK(pointwise_defect(S, 2.0 * shear, vec({0, 0}), vec({0, 0})).defect == doctest::Approx(3.0));
  const Manifold V = Manifold::euclidean(3, Structure::volume);
  CHECK(pointwise_defect(V, Mat(vec({2, 0.5, 1}).asDiagonal()), vec({0, 0, 0}), vec({0, 0, 0})).defect == 0.0);
  CHECK(pointwise_defect(V, 2.0 * Mat::Identity(3, 3), vec({0, 0, 0}), vec({0, 0, 0})).defect == doctest::Approx(7.0));
  // Contact: the scaling (x, y, z) -> (a x, a y, a^2 z) pulls alpha back to a^2 alpha.
  const Manifold C = Manifold::euclidean(3, Structure::contact);
  const Vec p = vec({0.3, -0.2, 0.1});
  const Vec img = vec({0.6, -0.4, 0.4});
  const auto d = pointwise_defect(C, Mat(vec({2, 2, 4}).asDiagonal()), p, img);
  CHECK(d.defect < 1e-15);
  CHECK(d.lambda == doctest::Approx(4.0));
}

TEST_CASE("single hamiltonian stage is symplectic to 1e-6") {
  const Manifold M = Manifold::euclidean(2, Structure::symplectic);
  const auto X = make_hamiltonian_bump(M, Point{vec({0, 0})}, vec({1, 0}), 0.5);
  const auto prog = one_stage(X, 0.4);
  std::mt19937_64 rng(52);
  const auto rep = check_structure(prog, ball_samples(rng, vec({0, 0}), 0.5, 100), 1e-5, 1e-6);
  CHECK(rep.max_defect <= 1e-6);
  CHECK(rep.pass);
}

TEST_CASE("property: defects follow the finite-difference error model") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 6; ++trial) {
    const bool vol = trial % 2;
    const Manifold M = Manifold::euclidean(vol ? 3 : 2, vol ? Structure::volume : Structure::symplectic);
    const FieldClass cls = vol ? FieldClass::divergence_free : FieldClass::hamiltonian;
    const int m = M.dim();
    const auto X = make_bump(cls, M, Point{Vec::Zero(m)}, random_unit(rng, m), 0.5, BumpProfile(), 0.0);
    const auto prog = one_stage(X, std::uniform_real_distribution<double>(0.5, 1.5)(rng));
    const auto pts = ball_samples(rng, Vec::Zero(m), 0.5, 50);
    double prev = check_structure(prog, pts, 1e-2, 1).max_defect;
    for (double h = 5e-3; h >= 1e-6; h /= 2) {
      const double d = check_structure(prog, pts, h, 1).max_defect;
      // Truncation shrinks by four per halving until the 1/h rounding term
      // takes over.  The batched stencil keeps integration error smooth, so
      // the floor sits well below abs_tol / h.
      CHECK(d <= std::max(0.3 * prev, 1e-13 / h));
      prev = d;
    }
  }
}

TEST_CASE("symplectic program in the plane preserves area") {
  std::mt19937_64 rng(54);
  const Manifold M = Manifold::euclidean(2, Structure::symplectic);
  const auto x = random_configuration(rng, M, 2, 0.3);
  const auto y = random_configuration(rng, M, 2, 0.3);
  const auto r = solve(x, y, M, FieldClass::hamiltonian);
  DiffeoProgram as_volume = r.program;
  const auto samples = structure_samples(r.program, {}, 100, 3).points;
  std::vector<double> dets;
  for (const Vec& p : samples) {
    const Mat J = jacobian_and_image(r.program, p, 1e-5).jacobian;
    const auto sym = pointwise_defect(M, J, p, p).defect;
    // For 2 x 2 matrices J^T Omega J = det(J) Omega.
    CHECK(std::abs(J.determinant() - 1.0) == doctest::Approx(sym).epsilon(1e-9));
  }
}

TEST_CASE("contact conformal factor is 1 + O(t) and multiplicative") {
  const Manifold M = Manifold::euclidean(3, Structure::contact);
  std::mt19937_64 rng(55);
  const auto X = make_contact_bump(M, Point{vec({0, 0, 0})}, random_unit(rng, 3), 0.6);
  const auto pts = ball_samples(rng, Vec::Zero(3), 0.6, 50);
  double dev_prev = 0.0;
  for (double t : {0.2, 0.1, 0.05}) {
    const auto rep = check_structure(one_stage(X, t), pts, 1e-5, 1e-4);
    CHECK(rep.pass);
    CHECK(rep.lambda_min > 0.0);
    const double dev = std::max(std::abs(rep.lambda_max - 1), std::abs(rep.lambda_min - 1));
    if (dev_prev > 0.0) CHECK(dev == doctest::Approx(dev_prev / 2).epsilon(0.15));
    dev_prev = dev;
  }

  const auto Y = make_contact_bump(M, Point{vec({0.2, -0.1, 0.1})}, random_unit(rng, 3), 0.5);
  const auto P = one_stage(X, 0.3), Q = one_stage(Y, -0.4);
  const auto PQ = then(Q, P);
  for (const Vec& p : pts) {
    const auto jq = jacobian_and_image(Q, p, 1e-5);
    const auto jp = jacobian_and_image(P, jq.image, 1e-5);
    const auto jpq = jacobian_and_image(PQ, p, 1e-5);
    const double lq = pointwise_defect(M, jq.jacobian, p, jq.image).lambda;
    const double lp = pointwise_defect(M, jp.jacobian, jq.image, jp.image).lambda;
    const double lpq = pointwise_defect(M, jpq.jacobian, p, jpq.image).lambda;
    CHECK(lpq == doctest::Approx(lp * lq).epsilon(1e-6));
  }
}

TEST_CASE("oracles: hamiltonian and contact fields") {
  std::mt19937_64 rng(56);
  const Manifold S = Manifold::euclidean(4, Structure::symplectic);
  const auto H = make_hamiltonian_bump(S, Point{Vec::Zero(4)}, random_unit(rng, 4), 0.7);
  const auto hr = oracle_field_check(H, ball_samples(rng, Vec::Zero(4), 0.7, 100), 1e-6);
  CHECK(hr.pass);
  CHECK(hr.max_discrepancy <= 1e-6);

  const Manifold C = Manifold::euclidean(3, Structure::contact);
  const auto K = make_contact_bump(C, Point{vec({0.1, 0.2, 0})}, random_unit(rng, 3), 0.7);
  const auto cr = oracle_field_check(K, ball_samples(rng, vec({0.1, 0.2, 0}), 0.7, 100), 1e-6);
  CHECK(cr.pass);
  CHECK(cr.max_alpha_residual <= 1e-12);

  CHECK_THROWS_AS(oracle_field_check(make_general_field(C, Point{Vec::Zero(3)}, vec({1, 0, 0}), 0.5), {}, 1e-6),
                  std::invalid_argument);
}

TEST_CASE("oracles: divergence is an O(h^2) stencil effect") {
  std::mt19937_64 rng(57);
  for (int m = 2; m <= 4; ++m) {
    const Manifold M = Manifold::euclidean(m, Structure::volume);
    for (double r : {0.1, 0.5, 1.0}) {
      const auto X = make_divfree_bump(M, Point{Vec::Zero(m)}, random_unit(rng, m), r);
      const auto pts = ball_samples(rng, Vec::Zero(m), r, 100);
      const double coarse = oracle_field_check(X, pts, 1e-6, 1e-4 * r).max_discrepancy;
      const double fine = oracle_field_check(X, pts, 1e-6, 1e-5 * r).max_discrepancy;
      CHECK(fine <= 1e-6);
      CHECK(coarse / fine == doctest::Approx(100.0).epsilon(0.05));
    }
  }
}

TEST_CASE("roundtrip: empty program, single stage, solver output") {
  std::mt19937_64 rng(58);
  DiffeoProgram empty;
  empty.manifold = Manifold::euclidean(2);
  CHECK(roundtrip_check(empty, {vec({0.1, 0.2})}, 0.0).max_residual == 0.0);

  const Manifold M = Manifold::euclidean(2, Structure::symplectic);
  const auto H = make_hamiltonian_bump(M, Point{Vec::Zero(2)}, vec({0, 1}), 0.5);
  const auto one = one_stage(H, 0.8);
  CHECK(roundtrip_check(one, ball_samples(rng, Vec::Zero(2), 0.5, 100), 10 * one.options.abs_tol).pass);

  const Manifold V = Manifold::euclidean(3, Structure::volume);
  const auto x = random_configuration(rng, V, 3, 0.2);
  const auto y = random_configuration(rng, V, 3, 0.2);
  const auto r = solve(x, y, V, FieldClass::divergence_free);
  const auto samples = structure_samples(r.program, coords(x), 200, 1);
  CHECK(roundtrip_check(r.program, samples.points, 1e-7).pass);
}

TEST_CASE("structure samples: anchors, support and background") {
  const Manifold M = Manifold::euclidean(2, Structure::symplectic);
  const auto H = make_hamiltonian_bump(M, Point{vec({3, 3})}, vec({0, 1}), 0.5);
  const auto prog = one_stage(H, 0.8);
  const std::vector<Vec> anchors{vec({3, 3}), vec({3.2, 3})};
  const auto s = structure_samples(prog, anchors, 200, 9);
  CHECK(s.points.size() == 200);
  CHECK(s.anchors == 2);
  CHECK(s.anchors + s.in_support + s.background == 200);
  CHECK(s.in_support == 99);
  for (std::size_t k = s.anchors; k < s.anchors + s.in_support; ++k)
    CHECK((s.points[k] - vec({3, 3})).norm() <= 0.5);
  // Deterministic per seed.
  CHECK(structure_samples(prog, anchors, 200, 9).points == s.points);

  DiffeoProgram empty;
  empty.manifold = Manifold::torus({1.0, 2.0});
  const auto t = structure_samples(empty, {}, 50, 1);
  for (const Vec& p : t.points) CHECK((p[0] >= 0 && p[0] < 1 && p[1] >= 0 && p[1] < 2));
}
