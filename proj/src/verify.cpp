#include "flowmatch/verify.hpp"

#include "flowmatch/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace flowmatch {

SampleSet structure_samples(const DiffeoProgram& prog, const std::vector<Vec>& anchors,
                            std::size_t count, std::uint64_t seed) {
  const Manifold& M = prog.manifold;
  const int m = M.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SampleSet out;

  for (const Vec& a : anchors) {
    if (out.points.size() >= count / 4) break;
    out.points.push_back(canonicalize(M, a).coords);
    ++out.anchors;
  }

  const std::size_t support_target = out.points.size() + (count - out.points.size()) / 2;
  if (!prog.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, prog.size() - 1);
    while (out.points.size() < support_target) {
      const VectorField& X = prog.stages[pick(rng)].field;
      Vec dir(m);
      for (int a = 0; a < m; ++a) dir[a] = gauss(rng);
      dir.normalize();
      const double rad = X.radius() * std::pow(unit(rng), 1.0 / m);
      out.points.push_back(canonicalize(M, Vec(X.center().coords + rad * dir)).coords);
      ++out.in_support;
    }
  }

  Vec lo(m), hi(m);
  if (M.is_torus()) {
    lo.setZero();
    for (int a = 0; a < m; ++a) hi[a] = M.periods()[static_cast<std::size_t>(a)];
  } else {
    lo = Vec::Constant(m, -1.0);
    hi = Vec::Constant(m, 1.0);
    bool first = true;
    double pad = 0.0;
    auto grow = [&](const Vec& p) {
      if (first) {
        lo = p;
        hi = p;
        first = false;
      }
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    };
    for (const Vec& a : anchors) grow(a);
    for (const Stage& s : prog.stages) {
      grow(s.field.center().coords);
      pad = std::max(pad, s.field.radius());
    }
    if (first) pad = 1.0;
    lo.array() -= pad;
    hi.array() += pad;
  }
  while (out.points.size() < count) {
    Vec p(m);
    for (int a = 0; a < m; ++a) p[a] = lo[a] + (hi[a] - lo[a]) * unit(rng);
    out.points.push_back(canonicalize(M, p).coords);
    ++out.background;
  }
  return out;
}

PointDefect pointwise_defect(const Manifold& M, const Mat& J, const Vec& p, const Vec& image) {
  PointDefect d;
  switch (M.structure()) {
    case Structure::none:
      break;
    case Structure::symplectic: {
      const Mat omega = symplectic_matrix(M);
      d.defect = (J.transpose() * omega * J - omega).cwiseAbs().maxCoeff();
      break;
    }
    case Structure::volume:
      d.defect = std::abs(J.determinant() - 1.0);
      break;
    case Structure::contact: {
      const Vec alpha_p = contact_form(M, p);
      const Vec pulled = J.transpose() * contact_form(M, image);
      d.lambda = pulled.dot(alpha_p) / alpha_p.squaredNorm();
      d.defect = (pulled - d.lambda * alpha_p).norm() / alpha_p.norm();
      break;
    }
  }
  return d;
}

StructureReport check_structure(const DiffeoProgram& prog, const std::vector<Vec>& samples,
                                double h, double tol) {
  if (!(h > 0.0)) throw std::invalid_argument("structure check step must be positive");
  for (const Stage& s : prog.stages)
    if (!(s.field.manifold() == prog.manifold))
      throw std::invalid_argument("program stage lives on a different manifold");
  StructureReport rep;
  rep.structure = prog.manifold.structure();
  rep.samples = samples.size();
  rep.h = h;
  rep.tol = tol;
  const auto defects = kernels::structure_defects_omp(prog, samples, h);
  bool first = true;
  for (const PointDefect& d : defects) {
    rep.max_defect = std::max(rep.max_defect, d.defect);
    if (rep.structure == Structure::contact) {
      rep.lambda_min = first ? d.lambda : std::min(rep.lambda_min, d.lambda);
      rep.lambda_max = first ? d.lambda : std::max(rep.lambda_max, d.lambda);
      first = false;
    }
  }
  rep.lambda_out_of_model = rep.structure == Structure::contact && !(rep.lambda_min > 0.0);
  rep.pass = rep.max_defect <= tol && !rep.lambda_out_of_model;
  return rep;
}

OracleReport oracle_field_check(const VectorField& X, const std::vector<Vec>& samples, double tol,
                                double h) {
  const Manifold& M = X.manifold();
  const int m = M.dim();
  OracleReport rep;
  rep.cls = X.field_class();
  rep.samples = samples.size();
  rep.tol = tol;
  if (rep.cls == FieldClass::general)
    throw std::invalid_argument("general-class fields carry no generator to check against");

  auto central_gradient = [&](const Vec& x) {
    Vec g(m);
    for (int j = 0; j < m; ++j) {
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      g[j] = (X.generator(xp) - X.generator(xm)) / (2.0 * h);
    }
    return g;
  };

  for (const Vec& x : samples) {
    const Vec closed = X(x);
    double discrepancy = 0.0;
    switch (rep.cls) {
      case FieldClass::hamiltonian: {
        // i_X sigma (e_j) = sum_i X_i Omega_ij = df_j
        const Mat omega = symplectic_matrix(M);
        const Vec oracle = Eigen::PartialPivLU<Mat>(omega.transpose()).solve(central_gradient(x));
        discrepancy = (oracle - closed).norm();
        break;
      }
      case FieldClass::contact: {
        // Unknowns (X, mu):  alpha . X = f,   d(alpha)^T X - mu alpha = -df.
        const Vec alpha = contact_form(M, x);
        const Mat da = contact_form_differential(M);
        Mat A = Mat::Zero(m + 1, m + 1);
        Vec rhs(m + 1);
        A.block(0, 0, 1, m) = alpha.transpose();
        A.block(1, 0, m, m) = da.transpose();
        A.block(1, m, m, 1) = -alpha;
        rhs[0] = X.generator(x);
        rhs.tail(m) = -central_gradient(x);
        const Vec sol = Eigen::PartialPivLU<Mat>(A).solve(rhs);
        discrepancy = (sol.head(m) - closed).norm();
        rep.max_alpha_residual = std::max(rep.max_alpha_residual, std::abs(alpha.dot(closed) - X.generator(x)));
        break;
      }
      case FieldClass::divergence_free: {
        double div = 0.0;
        for (int j = 0; j < m; ++j) {
          Vec xp = x, xm = x;
          xp[j] += h;
          xm[j] -= h;
          div += (X(xp)[j] - X(xm)[j]) / (2.0 * h);
        }
        discrepancy = std::abs(div);
        break;
      }
      case FieldClass::general: break;
    }
    rep.max_discrepancy = std::max(rep.max_discrepancy, discrepancy);
  }
  rep.pass = rep.max_discrepancy <= tol;
  return rep;
}

RoundtripReport roundtrip_check(const DiffeoProgram& prog, const std::vector<Vec>& samples,
                                double tol) {
  RoundtripReport rep;
  rep.samples = samples.size();
  rep.tol = tol;
  const DiffeoProgram inv = invert(prog);
  for (double r : kernels::roundtrip_omp(prog, inv, samples)) rep.max_residual = std::max(rep.max_residual, r);
  rep.pass = rep.max_residual <= tol;
  return rep;
}

}  // namespace flowmatch
