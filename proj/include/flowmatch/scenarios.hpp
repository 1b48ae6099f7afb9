#pragma once

#include "flowmatch/io.hpp"

#include <string>
#include <vector>

namespace flowmatch {

// Built-in demonstration problems: swap2d, braid3, torus-swap, contact3d.
std::vector<std::string> demo_names();
// Throws std::invalid_argument for an unknown name.
io::Scenario demo_scenario(const std::string& name);

}  // namespace flowmatch
