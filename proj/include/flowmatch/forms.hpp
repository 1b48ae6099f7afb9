#pragma once

#include "flowmatch/geometry.hpp"

#include <cstdint>
#include <vector>

namespace flowmatch::forms {

// A k-form on R^m with constant coefficients, stored on the basis
// e^{i_1} ^ ... ^ e^{i_k} (i_1 < ... < i_k) indexed by the bitmask of {i_j}.
class Form {
 public:
  Form(int dim, int degree);

  static Form scalar(int dim, double value);
  static Form one_form(const Vec& covector);

  int dim() const { return dim_; }
  int degree() const { return degree_; }

  double& operator[](std::uint32_t mask) { return coeff_[mask]; }
  double operator[](std::uint32_t mask) const { return coeff_[mask]; }

  // Only meaningful for degree 1.
  Vec as_vector() const;

 private:
  int dim_;
  int degree_;
  std::vector<double> coeff_;
};

// Sign of the shuffle that sorts the concatenation of index sets a then b;
// zero when they intersect.
int shuffle_sign(std::uint32_t a, std::uint32_t b);

Form wedge(const Form& a, const Form& b);

// Flat-metric Hodge star for the orientation e^1 ^ ... ^ e^m:
// a ^ *b = <a, b> vol.
Form hodge_star(const Form& a);

}  // namespace flowmatch::forms
