// One-point-at-a-time path planning in the configuration space M^(n).
//
// Points move in phases.  A point moves only when its target is clear of all
// other points; when every remaining target is blocked (e.g. a swap), one
// blocker is first routed to a nearby parking spot clear of all points and
// targets.
// The moving point follows its straight segment and detours around each static
// point that comes closer than the clearance radius along a circular arc in a
// 2-plane containing the segment.

#include "flowmatch/solve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flowmatch {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

class Planner {
 public:
  Planner(const Manifold& M, const PathRequest& req, std::mt19937_64& rng, double kappa)
      : M_(M), req_(req), rng_(rng), kappa_(kappa) {}

  // Returns false when this attempt fails.
  bool run(const Configuration& x, const Configuration& y, const std::vector<std::size_t>& order,
           std::vector<Configuration>& out) {
    const std::size_t n = x.size();
    cur_.clear();
    for (const Point& p : x.points()) cur_.push_back(p.coords);
    targets_.clear();
    for (const Point& p : y.points()) targets_.push_back(p.coords);
    out_ = &out;
    out.clear();
    out.push_back(x);

    std::vector<std::size_t> remaining = order;
    std::size_t moves = 0;
    while (!remaining.empty()) {
      if (++moves > 4 * n + 4) return false;
      auto it = std::find_if(remaining.begin(), remaining.end(),
                             [&](std::size_t i) { return target_free(i); });
      if (it != remaining.end()) {
        const std::size_t i = *it;
        if (!move(i, targets_[i])) return false;
        remaining.erase(it);
        continue;
      }
      const std::size_t i = remaining.front();
      std::size_t blocker = n;
      for (std::size_t j : remaining)
        if (j != i && distance(M_, targets_[i], cur_[j]) < kappa_ * req_.delta) {
          blocker = j;
          break;
        }
      if (blocker == n) return false;
      Vec spot;
      if (!parking_spot(blocker, spot)) return false;
      if (!move(blocker, spot)) return false;
    }
    return true;
  }

 private:
  bool target_free(std::size_t i) const {
    for (std::size_t j = 0; j < cur_.size(); ++j)
      if (j != i && distance(M_, targets_[i], cur_[j]) < kappa_ * req_.delta) return false;
    return true;
  }

  double radius_of(const std::vector<Vec>& pts) const {
    double r = std::min(req_.radius_factor * separation(pts, M_), req_.max_radius);
    if (M_.is_torus()) r = std::min(r, 0.25 * M_.min_period());
    return r;
  }

  double dense_spacing() const {
    double r = req_.max_radius;
    if (std::isfinite(req_.delta)) r = std::min(r, req_.radius_factor * req_.delta);
    if (M_.is_torus()) r = std::min(r, 0.25 * M_.min_period());
    return 0.2 * req_.step_factor * r;
  }

  // Nearest sampled spot that keeps clearance from the other points and from
  // every target, so that parking never blocks a later phase.
  bool parking_spot(std::size_t j, Vec& spot) {
    const int m = M_.dim();
    const double need = 1.05 * kappa_ * req_.delta;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double best_cost = kUnbounded;
    bool found = false;
    for (int trial = 0; trial < 800; ++trial) {
      Vec dir(m);
      for (int a = 0; a < m; ++a) dir[a] = gauss(rng_);
      dir.normalize();
      const double reach = 3.0 * need * std::pow(unit(rng_), 1.0 / m);
      const Vec p = canonicalize(M_, Vec(cur_[j] + reach * dir)).coords;
      double clearance = kUnbounded;
      for (std::size_t k = 0; k < cur_.size(); ++k) {
        if (k != j) clearance = std::min(clearance, distance(M_, p, cur_[k]));
        clearance = std::min(clearance, distance(M_, p, targets_[k]));
      }
      if (clearance < need) continue;
      const double cost = distance(M_, p, cur_[j]);
      if (cost < best_cost) {
        best_cost = cost;
        spot = p;
        found = true;
      }
    }
    return found;
  }

  struct Obstacle {
    Vec s;
    double radius;
    double entry;  // line parameter where the segment enters the circle
    double along;  // line parameter of the projection of s
    double offset;
    std::size_t owner;
  };

  struct Image {
    Vec s;
    std::size_t owner;
  };

  // Static images that can come near the segment a -> b.
  std::vector<Image> obstacle_images(std::size_t moving, const Vec& a) const {
    std::vector<Image> out;
    const int m = M_.dim();
    for (std::size_t j = 0; j < cur_.size(); ++j) {
      if (j == moving) continue;
      const Vec base = a + M_.wrap(cur_[j] - a);
      if (!M_.is_torus()) {
        out.push_back(Image{base, j});
        continue;
      }
      std::vector<int> k(static_cast<std::size_t>(m), -1);
      while (true) {
        Vec s = base;
        for (int q = 0; q < m; ++q)
          s[q] += k[static_cast<std::size_t>(q)] * M_.periods()[static_cast<std::size_t>(q)];
        out.push_back(Image{s, j});
        int q = 0;
        while (q < m && ++k[static_cast<std::size_t>(q)] == 2) k[static_cast<std::size_t>(q++)] = -1;
        if (q == m) break;
      }
    }
    return out;
  }

  double clearance_from(const Vec& p, std::size_t moving, std::size_t skip_static) const {
    double best = kUnbounded;
    for (std::size_t j = 0; j < cur_.size(); ++j)
      if (j != moving && j != skip_static) best = std::min(best, distance(M_, p, cur_[j]));
    return best;
  }

  // Dense polyline (unwrapped coordinates) from a to b around static points.
  std::vector<Vec> route(std::size_t moving, const Vec& a, const Vec& b) {
    const double ds = dense_spacing();
    std::vector<Vec> dense{a};
    auto push_line = [&](const Vec& p, const Vec& q) {
      const double len = (q - p).norm();
      const auto pieces = static_cast<long>(std::ceil(len / ds));
      for (long k = 1; k <= pieces; ++k)
        dense.push_back(p + (q - p) * (static_cast<double>(k) / static_cast<double>(pieces)));
    };

    const double L = (b - a).norm();
    if (L == 0.0) return dense;
    const Vec u = (b - a) / L;
    const auto images = obstacle_images(moving, a);
    std::vector<bool> done(images.size(), false);
    Vec P = a;
    double pos = 0.0;  // line parameter of P

    for (std::size_t guard = 0; guard <= images.size(); ++guard) {
      std::optional<Obstacle> next;
      std::size_t next_idx = 0;
      for (std::size_t q = 0; q < images.size(); ++q) {
        if (done[q]) continue;
        const Vec& s = images[q].s;
        const double along = (s - a).dot(u);
        const double clamped = std::clamp(along, pos, L);
        const double dist = (s - (a + clamped * u)).norm();
        const double R = std::min({kappa_ * req_.delta, (P - s).norm(), (b - s).norm()});
        if (!(dist < R * (1.0 - 1e-9))) continue;
        const double offset = (s - (a + along * u)).norm();
        const double entry = along - std::sqrt(std::max(0.0, R * R - offset * offset));
        if (entry < pos - 1e-12) continue;  // P already inside: clearance check will reject
        if (!next || entry < next->entry) {
          next = Obstacle{s, R, entry, along, offset, images[q].owner};
          next_idx = q;
        }
      }
      if (!next) break;
      done[next_idx] = true;
      const Obstacle& ob = *next;
      const double h = std::sqrt(std::max(0.0, ob.radius * ob.radius - ob.offset * ob.offset));
      const Vec P1 = a + (ob.along - h) * u;
      const Vec P2 = a + (ob.along + h) * u;
      push_line(P, P1);

      // Candidate detour planes: the side of the segment, or any normal
      // direction when the obstacle sits on the segment.
      std::vector<Vec> sides;
      const Vec off = ob.s - (a + ob.along * u);
      if (ob.offset > 1e-9 * ob.radius) {
        sides.push_back(-off / ob.offset);
        sides.push_back(off / ob.offset);
      } else {
        const Mat ext = orthonormal_extension(u);
        for (int c = 0; c < ext.cols(); ++c) {
          sides.push_back(ext.col(c));
          sides.push_back(-ext.col(c));
        }
      }
      double best = -1.0;
      std::vector<std::size_t> ties;
      for (std::size_t c = 0; c < sides.size(); ++c) {
        const Vec mid = ob.s + ob.radius * sides[c];
        const double cl = clearance_from(canonicalize(M_, mid).coords, moving, ob.owner);
        if (cl > best + 1e-12) {
          best = cl;
          ties.assign(1, c);
        } else if (std::abs(cl - best) <= 1e-12) {
          ties.push_back(c);
        }
      }
      const Vec w = sides[ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng_)]];

      const double sigma = off.dot(w) > 0.0 ? -1.0 : 1.0;
      const double th1 = std::atan2(sigma * ob.offset, -h);
      double th2 = std::atan2(sigma * ob.offset, h);
      while (th2 > th1) th2 -= kTwoPi;
      const double arc_len = (th1 - th2) * ob.radius;
      const auto pieces = std::max(4L, static_cast<long>(std::ceil(arc_len / ds)));
      for (long k = 1; k < pieces; ++k) {
        const double th = th1 + (th2 - th1) * static_cast<double>(k) / static_cast<double>(pieces);
        dense.push_back(ob.s + ob.radius * (std::cos(th) * u + std::sin(th) * w));
      }
      dense.push_back(P2);
      P = P2;
      pos = ob.along + h;
    }
    push_line(P, b);
    return dense;
  }

  static bool straight(const std::vector<Vec>& dense, const Vec& a, const Vec& b) {
    const double L = (b - a).norm();
    const Vec u = (b - a) / L;
    for (const Vec& p : dense) {
      const Vec d = p - a;
      if ((d - d.dot(u) * u).norm() > 1e-12 * L) return false;
    }
    return true;
  }

  void record() {
    std::vector<Point> snapshot;
    for (const Vec& p : cur_) snapshot.push_back(Point{p});
    out_->push_back(Configuration::make(M_, std::move(snapshot)));
  }

  // Detour-free segment in k equal pieces, the smallest k whose every piece
  // fits the trust region of the waypoint it starts from.
  bool even_split(std::size_t i, const Vec& a, const Vec& b, const Vec& goal) {
    const double L = (b - a).norm();
    const double r0 = radius_of(cur_);
    const auto k0 = std::max(1L, static_cast<long>(std::ceil(L / (req_.step_factor * r0))));
    std::vector<Vec> pts = cur_;
    for (long k = k0; k < k0 + 64; ++k) {
      bool ok = true;
      for (long q = 0; q < k && ok; ++q) {
        pts[i] = a + (b - a) * (static_cast<double>(q) / static_cast<double>(k));
        const Vec next = a + (b - a) * (static_cast<double>(q + 1) / static_cast<double>(k));
        ok = (next - pts[i]).norm() <= req_.step_factor * radius_of(pts) &&
             clearance_from(canonicalize(M_, next).coords, i, cur_.size()) >= req_.delta;
      }
      if (!ok) continue;
      for (long q = 1; q <= k; ++q) {
        cur_[i] = q == k ? goal : canonicalize(M_, Vec(a + (b - a) * (static_cast<double>(q) / static_cast<double>(k)))).coords;
        record();
      }
      return true;
    }
    return false;
  }

  bool move(std::size_t i, const Vec& goal) {
    const Vec a = cur_[i];
    const Vec b = a + M_.wrap(goal - a);
    if ((b - a).norm() == 0.0) return true;
    const std::vector<Vec> dense = route(i, a, b);

    for (const Vec& p : dense)
      if (clearance_from(p, i, cur_.size()) < req_.delta) return false;

    if (straight(dense, a, b) && even_split(i, a, b, goal)) return true;

    // Greedy waypoints: farthest dense point within the local trust region.
    std::size_t idx = 0;
    Vec w = a;
    while (idx + 1 < dense.size()) {
      std::vector<Vec> pts = cur_;
      pts[i] = w;
      const double rho = 0.9 * req_.step_factor * radius_of(pts);
      std::size_t j = idx;
      while (j + 1 < dense.size() && (dense[j + 1] - w).norm() <= rho) ++j;
      if (j == idx) return false;
      idx = j;
      w = dense[idx];
      cur_[i] = (idx + 1 == dense.size()) ? goal : canonicalize(M_, w).coords;
      record();
    }
    cur_[i] = goal;
    return true;
  }

  const Manifold& M_;
  PathRequest req_;
  std::mt19937_64& rng_;
  double kappa_;
  std::vector<Vec> cur_;
  std::vector<Vec> targets_;
  std::vector<Configuration>* out_ = nullptr;
};

}  // namespace

std::vector<Configuration> plan_path(const Configuration& x, const Configuration& y,
                                     const Manifold& M, const PathRequest& req,
                                     std::mt19937_64& rng) {
  if (x.size() != y.size()) throw std::invalid_argument("endpoints differ in point count");
  if (x.size() == 0) throw std::invalid_argument("empty configuration");
  if (!(req.step_factor > 0.0 && req.step_factor < 1.0)) throw std::invalid_argument("step_factor must be in (0,1)");
  if (!(req.radius_factor > 0.0 && req.radius_factor < 0.5))
    throw std::invalid_argument("radius_factor must be in (0,1/2)");

  PathRequest r = req;
  const double allowed = 0.5 * std::min(separation(x, M), separation(y, M));
  if (!(r.delta > 0.0) || r.delta > allowed) r.delta = allowed;

  if (max_pointwise_distance(M, x, y) == 0.0) return {x};

  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Configuration> out;
  for (int attempt = 0; attempt <= r.max_retries; ++attempt) {
    double kappa = 1.25;
    if (attempt > 0) {
      std::shuffle(order.begin(), order.end(), rng);
      kappa = std::uniform_real_distribution<double>(1.1, 1.6)(rng);
    }
    Planner planner(M, r, rng, kappa);
    if (!planner.run(x, y, order, out)) continue;
    bool ok = max_pointwise_distance(M, out.back(), y) == 0.0;
    for (const auto& c : out)
      if (separation(c, M) < r.delta) ok = false;
    if (ok) return out;
  }
  throw PlannerError("path planner failed after retries");
}

}  // namespace flowmatch
