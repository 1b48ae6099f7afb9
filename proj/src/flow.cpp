#include "flowmatch/flow.hpp"

#include <cmath>
#include <sstream>

namespace flowmatch {

Vec flow_raw(const VectorField& X, const Vec& x, double t, const IntegratorOptions& opts) {
  if (!std::isfinite(t)) throw std::invalid_argument("flow time must be finite");
  if (t == 0.0 || X.vanishes_at(x)) return x;
  return integrate([&X](const Vec& y, Vec& dy) { dy = X(y); }, x, t, opts);
}

Point flow(const VectorField& X, const Point& p, double t, const IntegratorOptions& opts) {
  return canonicalize(X.manifold(), flow_raw(X, p.coords, t, opts));
}

void flow_batch(const VectorField& X, Mat& pts, double t, const IntegratorOptions& opts) {
  if (t == 0.0) return;
  const Eigen::Index count = pts.rows();
  const Eigen::Index m = pts.cols();
  bool any = false;
  for (Eigen::Index i = 0; i < count && !any; ++i) any = !X.vanishes_at(Vec(pts.row(i).transpose()));
  if (!any) return;
  Vec state(count * m);
  for (Eigen::Index i = 0; i < count; ++i) state.segment(i * m, m) = pts.row(i).transpose();
  auto rhs = [&X, count, m](const Vec& y, Vec& dy) {
    dy.resize(y.size());
    for (Eigen::Index i = 0; i < count; ++i) dy.segment(i * m, m) = X(Vec(y.segment(i * m, m)));
  };
  state = integrate(rhs, std::move(state), t, opts);
  for (Eigen::Index i = 0; i < count; ++i) pts.row(i) = state.segment(i * m, m).transpose();
}

Vec apply_raw(const DiffeoProgram& prog, const Vec& x) {
  Vec y = x;
  for (auto it = prog.stages.rbegin(); it != prog.stages.rend(); ++it)
    y = flow_raw(it->field, y, it->time, prog.options);
  return y;
}

Point apply(const DiffeoProgram& prog, const Point& p) {
  return canonicalize(prog.manifold, apply_raw(prog, p.coords));
}

Configuration apply_config(const DiffeoProgram& prog, const Configuration& c) {
  std::vector<Point> out;
  out.reserve(c.size());
  for (const Point& p : c.points()) out.push_back(apply(prog, p));
  try {
    return Configuration::make(prog.manifold, std::move(out));
  } catch (const InvalidConfiguration& e) {
    std::ostringstream os;
    os << "images of points " << e.first << " and " << e.second
       << " collide (integration error)";
    throw InvalidConfiguration(os.str(), e.first, e.second);
  }
}

DiffeoProgram invert(const DiffeoProgram& prog) {
  DiffeoProgram inv;
  inv.manifold = prog.manifold;
  inv.options = prog.options;
  inv.stages.reserve(prog.stages.size());
  for (auto it = prog.stages.rbegin(); it != prog.stages.rend(); ++it)
    inv.stages.push_back(Stage{it->field, -it->time});
  return inv;
}

DiffeoProgram then(const DiffeoProgram& first, const DiffeoProgram& second) {
  DiffeoProgram out;
  out.manifold = first.manifold;
  out.options = first.options;
  out.stages = second.stages;
  out.stages.insert(out.stages.end(), first.stages.begin(), first.stages.end());
  return out;
}

bool structurally_equal(const DiffeoProgram& a, const DiffeoProgram& b) {
  if (!(a.manifold == b.manifold) || !(a.options == b.options) || a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a.stages[k].time != b.stages[k].time || !(a.stages[k].field == b.stages[k].field)) return false;
  return true;
}

JacobianResult jacobian_and_image(const DiffeoProgram& prog, const Vec& p, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("jacobian step must be positive");
  const int m = prog.manifold.dim();
  if (p.size() != m) throw std::invalid_argument("point has wrong dimension");
  // Row 0: p; rows 1..m: p + h e_j; rows m+1..2m: p - h e_j.
  Mat pts(2 * m + 1, m);
  pts.row(0) = p.transpose();
  for (int j = 0; j < m; ++j) {
    pts.row(1 + j) = p.transpose();
    pts(1 + j, j) += h;
    pts.row(1 + m + j) = p.transpose();
    pts(1 + m + j, j) -= h;
  }
  for (auto it = prog.stages.rbegin(); it != prog.stages.rend(); ++it)
    flow_batch(it->field, pts, it->time, prog.options);
  JacobianResult res;
  res.jacobian.resize(m, m);
  for (int j = 0; j < m; ++j)
    res.jacobian.col(j) = (pts.row(1 + j) - pts.row(1 + m + j)).transpose() / (2.0 * h);
  res.image = pts.row(0).transpose();
  return res;
}

Mat jacobian(const DiffeoProgram& prog, const Point& p, double h) {
  return jacobian_and_image(prog, p.coords, h).jacobian;
}

DiffeoProgram family_program(const FieldFamily& family, const Vec& times,
                             const IntegratorOptions& opts) {
  if (static_cast<std::size_t>(times.size()) != family.size())
    throw std::invalid_argument("time vector length must equal the family size N");
  DiffeoProgram prog;
  prog.manifold = family.manifold;
  prog.options = opts;
  prog.stages.reserve(family.size());
  for (std::size_t k = 0; k < family.size(); ++k)
    prog.stages.push_back(Stage{family.fields[k], times[static_cast<Eigen::Index>(k)]});
  return prog;
}

Configuration eval_f(const FieldFamily& family, const Vec& times, const IntegratorOptions& opts) {
  return apply_config(family_program(family, times, opts), family.config);
}

}  // namespace flowmatch
