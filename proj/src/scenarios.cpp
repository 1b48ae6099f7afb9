#include "flowmatch/scenarios.hpp"

#include <stdexcept>

namespace flowmatch {

std::vector<std::string> demo_names() { return {"swap2d", "braid3", "torus-swap", "contact3d"}; }

io::Scenario demo_scenario(const std::string& name) {
  io::Scenario s;
  if (name == "swap2d") {
    // Two points exchange places; the straight paths collide head on.
    s.manifold = Manifold::euclidean(2, Structure::volume);
    s.cls = FieldClass::divergence_free;
    s.source = {{-0.5, 0.0}, {0.5, 0.0}};
    s.target = {{0.5, 0.0}, {-0.5, 0.0}};
  } else if (name == "braid3") {
    s.manifold = Manifold::euclidean(2, Structure::symplectic);
    s.cls = FieldClass::hamiltonian;
    s.source = {{-0.6, 0.0}, {0.0, 0.3}, {0.6, 0.0}};
    s.target = {{0.0, 0.3}, {0.6, 0.0}, {-0.6, 0.0}};
  } else if (name == "torus-swap") {
    s.manifold = Manifold::torus({1.0, 1.0}, Structure::symplectic);
    s.cls = FieldClass::hamiltonian;
    s.source = {{0.25, 0.5}, {0.75, 0.5}};
    s.target = {{0.75, 0.5}, {0.25, 0.5}};
  } else if (name == "contact3d") {
    s.manifold = Manifold::euclidean(3, Structure::contact);
    s.cls = FieldClass::contact;
    s.source = {{0.0, 0.0, 0.0}, {0.5, 0.2, 0.0}, {-0.3, 0.4, 0.2}};
    s.target = {{0.4, -0.2, 0.3}, {-0.2, 0.1, -0.1}, {0.1, 0.5, 0.4}};
  } else {
    throw std::invalid_argument("unknown demo \"" + name + "\"");
  }
  s.seed = 1;
  s.options.seed = s.seed;
  return s;
}

}  // namespace flowmatch
